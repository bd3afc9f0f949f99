use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::aggregate::DateRange;
use crate::stats::RobustFlavor;

/// Where sentiment scores come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Built-in model; trained from the annotations when no file is given.
    Baseline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<PathBuf>,
    },
    /// A child process speaking the scorer protocol on stdin/stdout.
    Command { command: Vec<String> },
    /// A scorer listening on `host:port`.
    Tcp { address: String },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Baseline { model: None }
    }
}

fn default_batch_size() -> usize {
    256
}

fn default_timeout() -> u64 {
    60
}

/// One pipeline run. Relative paths are resolved against the config file's
/// directory by [`RunConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopphrases: Option<PathBuf>,
    pub gazetteer: PathBuf,
    pub population: PathBuf,
    pub policy: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<DateRange>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout")]
    pub backend_timeout_secs: u64,
    #[serde(default)]
    pub robust: RobustFlavor,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub corpus: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub stopphrases: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub backend_command: Option<Vec<String>>,
    pub backend_address: Option<String>,
    pub exclude: Option<(NaiveDate, NaiveDate)>,
    pub no_exclude: bool,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub backend_timeout_secs: Option<u64>,
    pub robust: Option<RobustFlavor>,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_json(body: &str) -> Result<RunConfig, ReportError> {
        serde_json::from_str(body).map_err(|e| ReportError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig, ReportError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|_| ReportError::MissingPath {
            what: "config",
            path: path.to_path_buf(),
        })?;
        let mut cfg = RunConfig::from_json(&body)
            .map_err(|e| ReportError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        cfg.rebase(&base);
        Ok(cfg)
    }

    /// Makes every relative path relative to `base` instead.
    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.gazetteer,
            &mut self.population,
            &mut self.policy,
            &mut self.output_dir,
        ] {
            rebase(base, p);
        }
        for p in [
            &mut self.keywords,
            &mut self.stopphrases,
            &mut self.annotations,
        ]
        .into_iter()
        .flatten()
        {
            rebase(base, p);
        }
        if let BackendConfig::Baseline { model: Some(m) } = &mut self.backend {
            rebase(base, m);
        }
    }

    pub fn apply(&mut self, o: ConfigOverrides) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        set!(
            corpus,
            gazetteer,
            population,
            policy,
            output_dir,
            seed,
            batch_size,
            backend_timeout_secs,
            robust
        );
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = Some(v); })*
            };
        }
        set_opt!(keywords, stopphrases, annotations);
        if let Some(m) = o.model {
            self.backend = BackendConfig::Baseline { model: Some(m) };
        }
        if let Some(c) = o.backend_command {
            self.backend = BackendConfig::Command { command: c };
        }
        if let Some(a) = o.backend_address {
            self.backend = BackendConfig::Tcp { address: a };
        }
        if let Some((start, end)) = o.exclude {
            self.exclude = Some(DateRange { start, end });
        }
        if o.no_exclude {
            self.exclude = None;
        }
    }

    /// Checks that inputs exist and settings are coherent.
    pub fn validate(&self) -> Result<(), ReportError> {
        let files = [
            ("corpus", Some(&self.corpus)),
            ("keywords", self.keywords.as_ref()),
            ("stopphrases", self.stopphrases.as_ref()),
            ("population", Some(&self.population)),
            ("policy", Some(&self.policy)),
            ("annotations", self.annotations.as_ref()),
        ];
        for (what, path) in files {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ReportError::MissingPath {
                        what,
                        path: p.clone(),
                    });
                }
            }
        }
        if !self.gazetteer.is_dir() {
            return Err(ReportError::MissingPath {
                what: "gazetteer",
                path: self.gazetteer.clone(),
            });
        }
        match &self.backend {
            BackendConfig::Baseline { model: Some(m) } if !m.is_file() => {
                return Err(ReportError::MissingPath {
                    what: "model",
                    path: m.clone(),
                })
            }
            BackendConfig::Baseline { model: None } if self.annotations.is_none() => {
                return Err(ReportError::Config(
                    "baseline backend needs either a model file or annotations to train on".into(),
                ))
            }
            BackendConfig::Command { command } if command.is_empty() => {
                return Err(ReportError::Config("backend command is empty".into()))
            }
            _ => {}
        }
        if let Some(r) = &self.exclude {
            DateRange::new(r.start, r.end).map_err(|e| ReportError::Config(e.to_string()))?;
        }
        if self.batch_size == 0 {
            return Err(ReportError::Config("batch_size must be positive".into()));
        }
        if self.backend_timeout_secs == 0 {
            return Err(ReportError::Config(
                "backend_timeout_secs must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Every input file, for the overwrite guard.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![&self.corpus, &self.population, &self.policy];
        v.extend(
            [&self.keywords, &self.stopphrases, &self.annotations]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path),
        );
        if let BackendConfig::Baseline { model: Some(m) } = &self.backend {
            v.push(m);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "corpus": "c.jsonl", "gazetteer": "gaz", "population": "p.csv",
        "policy": "pol.csv", "output_dir": "out", "annotations": "a.tsv"
    }"#;

    #[test]
    fn defaults_and_rebase() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.backend, BackendConfig::Baseline { model: None });
        assert_eq!(cfg.batch_size, 256);
        assert_eq!(cfg.robust, RobustFlavor::Hc1);
        cfg.rebase(Path::new("/data"));
        assert_eq!(cfg.corpus, PathBuf::from("/data/c.jsonl"));
        assert_eq!(cfg.annotations, Some(PathBuf::from("/data/a.tsv")));
    }

    #[test]
    fn unknown_fields_rejected() {
        let body = MINIMAL.replace("\"corpus\"", "\"corpse\": 1, \"corpus\"");
        assert!(RunConfig::from_json(&body).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        cfg.apply(ConfigOverrides {
            seed: Some(9),
            backend_address: Some("127.0.0.1:9000".into()),
            exclude: Some((d("2020-03-23"), d("2020-03-25"))),
            ..ConfigOverrides::default()
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(
            cfg.backend,
            BackendConfig::Tcp {
                address: "127.0.0.1:9000".into()
            }
        );
        assert_eq!(cfg.exclude.unwrap().start, d("2020-03-23"));
    }

    #[test]
    fn backend_json_shapes() {
        let body = MINIMAL.replace(
            "\"corpus\"",
            r#""backend": {"kind": "command", "command": ["python3", "serve.py"]}, "corpus""#,
        );
        let cfg = RunConfig::from_json(&body).unwrap();
        assert!(
            matches!(cfg.backend, BackendConfig::Command { ref command } if command.len() == 2)
        );
    }
}
