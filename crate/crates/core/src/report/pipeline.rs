use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::commands::{open_backend, train_from_annotations, MetricsReport};
use super::tables::{self, AnalysisRow};
use super::{svg, BackendConfig, ReportError, RunConfig};
use crate::aggregate::{self, AverageMode, DateRange, Population, StateSentiment};
use crate::classify::{self, ClassifierBackend};
use crate::geolocate::{Gazetteer, GeoOutcome, Region, StateCode};
use crate::ingest::{self, FilterChain, FilterReport, PhraseMatcher, RawPost};
use crate::policyindex;
use crate::stats::{self, Group};
use crate::textprep::NormalizedText;

/// CSV outputs whose bytes depend only on inputs and seed.
pub const CSV_ARTIFACTS: [&str; 5] = [
    "state_scores.csv",
    "daily_series.csv",
    "table2.csv",
    "table3.csv",
    "analysis_data.csv",
];

const OTHER_ARTIFACTS: [&str; 10] = [
    "table3_excl.csv",
    "state_scores_excl.csv",
    "daily_series_excl.csv",
    "map.svg",
    "bars.svg",
    "trend.svg",
    "anova.json",
    "model.json",
    "baseline_metrics.json",
    "manifest.json",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: &'static str,
    pub n_in: usize,
    pub n_out: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageCounts {
    pub retained: usize,
    /// Retained posts whose text is empty after normalization.
    pub empty_text: usize,
    pub resolved_state: usize,
    pub resolved_non_us: usize,
    pub resolved_unknown: usize,
    pub classified: usize,
    pub positive: usize,
    pub states_with_data: usize,
    pub states_without_data: Vec<StateCode>,
    /// Posts dropped by the exclusion window in the robustness rerun.
    pub excluded_posts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_metrics: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterReport>,
    pub counts: StageCounts,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub national_average: Option<BTreeMap<&'static str, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded: Option<DateRange>,
    /// SHA-256 of each artifact written, by file name.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    /// True when every stage's input equals the previous stage's output.
    pub fn reconciles(&self) -> bool {
        let c = &self.counts;
        let filter_ok = self
            .filter
            .is_none_or(|f| f.reconciles() && f.n_retained == c.retained);
        let geo_ok =
            c.resolved_state + c.resolved_non_us + c.resolved_unknown + c.empty_text == c.retained;
        // Post-level stages chain directly; stats and plots work on states.
        let posts: Vec<_> = self
            .stages
            .iter()
            .take_while(|s| s.name != "stats")
            .collect();
        let chain_ok = posts.windows(2).all(|w| w[0].n_out == w[1].n_in)
            && self
                .stages
                .iter()
                .find(|s| s.name == "stats")
                .is_none_or(|s| s.n_in == c.states_with_data);
        filter_ok && geo_ok && chain_ok && c.classified == c.resolved_state
    }
}

struct Labeled {
    state: StateCode,
    created_at: DateTime<Utc>,
    positive: bool,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    manifest: RunManifest,
    current_stage: &'static str,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

impl<'a> Run<'a> {
    fn begin(&mut self, stage: &'static str) -> Instant {
        self.current_stage = stage;
        log::info!("stage {stage}");
        Instant::now()
    }

    fn end(&mut self, started: Instant, n_in: usize, n_out: usize) {
        let seconds = Duration::as_secs_f64(&started.elapsed());
        self.manifest.stages.push(StageRecord {
            name: self.current_stage,
            n_in,
            n_out,
            seconds,
        });
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), ReportError> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|source| ReportError::Output { path, source })?;
        self.manifest
            .artifacts
            .insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn fail(&self, e: impl std::fmt::Display) -> ReportError {
        ReportError::stage(self.current_stage, e)
    }

    fn execute(&mut self) -> Result<(), ReportError> {
        let cfg = self.cfg;

        let t = self.begin("ingest");
        let keywords = match &cfg.keywords {
            Some(p) => {
                PhraseMatcher::from_file(p).map_err(|e| ReportError::Input(e.to_string()))?
            }
            None => PhraseMatcher::default_keywords(),
        };
        let stopphrases = match &cfg.stopphrases {
            Some(p) => {
                PhraseMatcher::from_file(p).map_err(|e| ReportError::Input(e.to_string()))?
            }
            None => PhraseMatcher::default_stopphrases(),
        };
        let records =
            ingest::open_jsonl(&cfg.corpus).map_err(|e| ReportError::Input(e.to_string()))?;
        let (posts, filter) = FilterChain {
            keywords,
            stopphrases,
        }
        .run(records);
        self.manifest.filter = Some(filter);
        self.manifest.counts.retained = posts.len();
        self.end(t, filter.n_input, posts.len());

        let t = self.begin("textprep");
        let cleaned: Vec<(&RawPost, NormalizedText)> = posts
            .iter()
            .map(|p| {
                (
                    p,
                    NormalizedText::new(
                        p.id.clone(),
                        p.extended_text.as_deref().unwrap_or(&p.text),
                    ),
                )
            })
            .filter(|(_, t)| !t.is_empty())
            .collect();
        self.manifest.counts.empty_text = posts.len() - cleaned.len();
        self.end(t, posts.len(), cleaned.len());

        let t = self.begin("geolocate");
        let gazetteer =
            Gazetteer::load(&cfg.gazetteer).map_err(|e| ReportError::Input(e.to_string()))?;
        let mut located = Vec::new();
        let mut texts = Vec::new();
        for (post, text) in cleaned {
            match gazetteer.resolve_post(post).outcome {
                GeoOutcome::State(s) => {
                    located.push((post, s));
                    texts.push(text);
                }
                GeoOutcome::NonUs => self.manifest.counts.resolved_non_us += 1,
                GeoOutcome::Unknown => self.manifest.counts.resolved_unknown += 1,
            }
        }
        self.manifest.counts.resolved_state = located.len();
        let n_in = posts.len() - self.manifest.counts.empty_text;
        self.end(t, n_in, located.len());

        let t = self.begin("classify");
        let mut backend = self.backend()?;
        self.manifest.backend_id = Some(backend.backend_id().to_string());
        let preds = classify::score_in_batches(backend.as_mut(), &texts, cfg.batch_size)
            .map_err(|e| ReportError::classify("classify", e))?;
        drop(backend);
        let labeled: Vec<Labeled> = located
            .iter()
            .zip(&preds)
            .map(|((post, state), pred)| Labeled {
                state: *state,
                created_at: post.created_at,
                positive: pred.label.is_positive(),
            })
            .collect();
        self.manifest.counts.classified = preds.len();
        self.manifest.counts.positive = labeled.iter().filter(|l| l.positive).count();
        self.end(t, located.len(), preds.len());

        let t = self.begin("aggregate");
        let population =
            Population::load(&cfg.population).map_err(|e| ReportError::Input(e.to_string()))?;
        let scores = state_table(&labeled, None, &population).map_err(|e| self.fail(e))?;
        let daily =
            aggregate::daily_series(labeled.iter().map(|l| (l.created_at, l.positive)), None)
                .map_err(|e| self.fail(e))?;
        let mut national = BTreeMap::new();
        for (key, mode) in [
            ("tweet_weighted", AverageMode::TweetWeighted),
            ("state_mean", AverageMode::StateMean),
        ] {
            national.insert(
                key,
                aggregate::national_average(&scores, mode).map_err(|e| self.fail(e))?,
            );
        }
        self.manifest.national_average = Some(national.clone());
        self.manifest.counts.states_with_data = scores.len();
        self.manifest.counts.states_without_data = StateCode::all()
            .filter(|s| !scores.iter().any(|r| r.state == *s))
            .collect();
        let bytes =
            csv_bytes(|b| aggregate::write_state_scores_csv(&scores, b).map_err(|e| e.to_string()))
                .map_err(|e| self.fail(e))?;
        self.write("state_scores.csv", &bytes)?;
        let bytes =
            csv_bytes(|b| aggregate::write_daily_series_csv(&daily, b).map_err(|e| e.to_string()))
                .map_err(|e| self.fail(e))?;
        self.write("daily_series.csv", &bytes)?;
        self.end(
            t,
            labeled.len(),
            scores.iter().map(|s| s.n_tweets as usize).sum(),
        );

        let t = self.begin("stats");
        let profiles = policyindex::load_profiles(&cfg.policy)
            .map_err(|e| ReportError::Input(format!("{}: {e}", cfg.policy.display())))?;
        let rows = tables::analysis_rows(&scores, &profiles);
        self.regression_outputs(&rows, "table3.csv", true)?;
        self.anova_output(&rows)?;
        if let Some(window) = cfg.exclude {
            let kept: Vec<&Labeled> = labeled
                .iter()
                .filter(|l| !window.contains(&l.created_at))
                .collect();
            self.manifest.counts.excluded_posts = labeled.len() - kept.len();
            self.manifest.excluded = Some(window);
            let excl_scores =
                state_table(&labeled, Some(&window), &population).map_err(|e| self.fail(e))?;
            let bytes = csv_bytes(|b| {
                aggregate::write_state_scores_csv(&excl_scores, b).map_err(|e| e.to_string())
            })
            .map_err(|e| self.fail(e))?;
            self.write("state_scores_excl.csv", &bytes)?;
            let excl_daily = aggregate::daily_series(
                labeled.iter().map(|l| (l.created_at, l.positive)),
                Some(&window),
            )
            .map_err(|e| self.fail(e))?;
            let bytes = csv_bytes(|b| {
                aggregate::write_daily_series_csv(&excl_daily, b).map_err(|e| e.to_string())
            })
            .map_err(|e| self.fail(e))?;
            self.write("daily_series_excl.csv", &bytes)?;
            let excl_rows = tables::analysis_rows(&excl_scores, &profiles);
            self.regression_outputs(&excl_rows, "table3_excl.csv", false)?;
        }
        self.end(t, scores.len(), rows.len());

        let t = self.begin("plots");
        self.write("map.svg", svg::map_svg(&scores).as_bytes())?;
        self.write(
            "bars.svg",
            svg::bars_svg(&scores, national.get("tweet_weighted").copied()).as_bytes(),
        )?;
        self.write(
            "trend.svg",
            svg::trend_svg(&daily, cfg.exclude.as_ref()).as_bytes(),
        )?;
        self.end(t, rows.len(), 3);
        Ok(())
    }

    fn backend(&mut self) -> Result<Box<dyn ClassifierBackend>, ReportError> {
        let cfg = self.cfg;
        if let BackendConfig::Baseline { model: None } = cfg.backend {
            let path = cfg.annotations.as_ref().expect("validated");
            let ann = classify::load_annotations(path)
                .map_err(|e| ReportError::classify("classify", e))?;
            let outcome = train_from_annotations(&ann, cfg.seed)
                .map_err(|e| ReportError::classify("classify", e))?;
            self.write("model.json", (outcome.model.to_json() + "\n").as_bytes())?;
            let metrics =
                serde_json::to_string_pretty(&outcome.report).expect("serializable") + "\n";
            self.write("baseline_metrics.json", metrics.as_bytes())?;
            self.manifest.baseline_metrics = Some(outcome.report);
            return Ok(Box::new(outcome.model));
        }
        open_backend(&cfg.backend, Duration::from_secs(cfg.backend_timeout_secs))
    }

    fn regression_outputs(
        &mut self,
        rows: &[AnalysisRow],
        table3: &str,
        with_descriptives: bool,
    ) -> Result<(), ReportError> {
        if with_descriptives {
            let m = tables::analysis_matrix(rows).map_err(|e| self.fail(e))?;
            let d = stats::describe(&m).map_err(|e| self.fail(e))?;
            let bytes = csv_bytes(|b| tables::write_table2(&d, b).map_err(|e| e.to_string()))
                .map_err(|e| self.fail(e))?;
            self.write("table2.csv", &bytes)?;
            let bytes =
                csv_bytes(|b| tables::write_analysis_csv(rows, b).map_err(|e| e.to_string()))
                    .map_err(|e| self.fail(e))?;
            self.write("analysis_data.csv", &bytes)?;
        }
        let models = tables::regression_models(rows, self.cfg.robust).map_err(|e| self.fail(e))?;
        let bytes = csv_bytes(|b| tables::write_table3(&models, b).map_err(|e| e.to_string()))
            .map_err(|e| self.fail(e))?;
        self.write(table3, &bytes)
    }

    fn anova_output(&mut self, rows: &[AnalysisRow]) -> Result<(), ReportError> {
        let groups: Vec<Group> = Region::ALL
            .iter()
            .map(|r| {
                Group::new(
                    r.as_str(),
                    rows.iter()
                        .filter(|row| row.region == *r)
                        .map(|row| row.score)
                        .collect(),
                )
            })
            .filter(|g| !g.values.is_empty())
            .collect();
        let anova = stats::oneway_anova(&groups).map_err(|e| self.fail(e))?;
        let bartlett = stats::bartlett(&groups);
        let body = serde_json::json!({
            "anova": {
                "f": tables::fmt_num(anova.f),
                "df_between": anova.df_between,
                "df_within": anova.df_within,
                "p": anova.p,
                "ss_between": anova.ss_between,
                "ss_within": anova.ss_within,
                "groups": anova.groups,
                "pairwise": anova.pairwise.iter().map(|p| serde_json::json!({
                    "group_a": p.group_a,
                    "group_b": p.group_b,
                    "mean_difference": p.mean_difference,
                    "t": tables::fmt_num(p.t),
                    "df": p.df,
                    "p_raw": p.p_raw,
                    "p_bonferroni": p.p_bonferroni,
                })).collect::<Vec<_>>(),
            },
            "bartlett": match &bartlett {
                Ok(b) => serde_json::to_value(b).expect("serializable"),
                Err(e) => serde_json::json!({"error": e.to_string()}),
            },
        });
        let text = serde_json::to_string_pretty(&body).expect("serializable") + "\n";
        self.write("anova.json", text.as_bytes())
    }
}

fn state_table(
    labeled: &[Labeled],
    exclude: Option<&DateRange>,
    population: &Population,
) -> Result<Vec<StateSentiment>, aggregate::AggregateError> {
    let tallies = aggregate::tally_states(
        labeled
            .iter()
            .filter(|l| !exclude.is_some_and(|r| r.contains(&l.created_at)))
            .map(|l| (l.state, l.positive)),
    );
    aggregate::scores_from_tallies(&tallies, population)
}

/// Refuses output directories where an artifact would overwrite an input.
fn guard_outputs(cfg: &RunConfig, out: &Path) -> Result<(), ReportError> {
    let canon = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let inputs: Vec<PathBuf> = cfg.input_files().into_iter().map(canon).collect();
    for name in CSV_ARTIFACTS.iter().chain(&OTHER_ARTIFACTS) {
        let target = canon(&out.join(name));
        if inputs.contains(&target) {
            return Err(ReportError::Config(format!(
                "output {} would overwrite an input file",
                target.display()
            )));
        }
    }
    Ok(())
}

/// Runs every stage and writes artifacts plus `manifest.json` under the
/// output directory. A failed stage still leaves a manifest recording what
/// was written.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest, ReportError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|source| ReportError::Output {
        path: cfg.output_dir.clone(),
        source,
    })?;
    guard_outputs(cfg, &cfg.output_dir)?;
    for name in CSV_ARTIFACTS.iter().chain(&OTHER_ARTIFACTS) {
        let stale = cfg.output_dir.join(name);
        if stale.is_file() {
            fs::remove_file(&stale).map_err(|source| ReportError::Output {
                path: stale,
                source,
            })?;
        }
    }
    let mut run = Run {
        cfg,
        out: cfg.output_dir.clone(),
        manifest: RunManifest {
            status: RunStatus::Running,
            failed_stage: None,
            error: None,
            config: cfg.clone(),
            backend_id: None,
            baseline_metrics: None,
            filter: None,
            counts: StageCounts::default(),
            stages: Vec::new(),
            national_average: None,
            excluded: None,
            artifacts: BTreeMap::new(),
        },
        current_stage: "setup",
    };
    let result = run.execute();
    match &result {
        Ok(()) => run.manifest.status = RunStatus::Complete,
        Err(e) => {
            run.manifest.status = RunStatus::Failed;
            run.manifest.failed_stage = Some(run.current_stage);
            run.manifest.error = Some(e.to_string());
        }
    }
    let body = serde_json::to_string_pretty(&run.manifest).expect("serializable") + "\n";
    let path = run.out.join("manifest.json");
    let written = fs::write(&path, body).map_err(|source| ReportError::Output { path, source });
    result?;
    written?;
    Ok(run.manifest)
}
