//! Acceptance checks, one line of output per criterion.
//!
//! Runs with its own `main` so every criterion is reported even when an
//! earlier one fails; the process exits non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use num_rational::Ratio;
use rand::Rng;

use solsent::aggregate::{
    national_average, scores_from_tallies, tally_states, wilson_interval, AverageMode, Population,
    Z_95,
};
use solsent::classify::{
    self, parse_annotations, BaselineConfig, BaselineModel, ClassifierBackend, SplitSpec,
};
use solsent::geolocate::{GeoMethod, GeoOutcome, StateCode};
use solsent::ingest::{FilterChain, PhraseMatcher, RawPost, Rejected};
use solsent::policyindex::{nem_score, rps_score, NemComponents, RpsInput};
use solsent::report::CSV_ARTIFACTS;
use solsent::stats::{
    bartlett, ols, oneway_anova, vif, DataMatrix, Group, RobustFlavor, StatsError,
};
use solsent::textprep::NormalizedText;

fn rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let took = started.elapsed();
    check(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn code(s: &str) -> StateCode {
    StateCode::from_code(s).unwrap()
}

// ---------------------------------------------------------------- policy indices

fn rps_oracle_suite() -> Result<(), String> {
    let started = Instant::now();
    // (target, year, generation) in quarter percentage points; expected pace as a ratio.
    let q = |v: i64| v as f64 / 4.0;
    type Case = (Option<i64>, Option<i32>, i64, Ratio<i64>);
    let cases: [Case; 12] = [
        (None, None, 48, Ratio::from_integer(0)),
        (None, None, 0, Ratio::from_integer(0)),
        (Some(120), Some(2030), 160, Ratio::from_integer(0)),
        (Some(200), Some(2025), 200, Ratio::from_integer(0)),
        (Some(300), None, 380, Ratio::from_integer(0)),
        (Some(160), None, 160, Ratio::from_integer(0)),
        (Some(200), Some(2030), 80, Ratio::new(120, 4 * 11)),
        (Some(400), Some(2045), 50, Ratio::new(350, 4 * 26)),
        (Some(100), Some(2020), 99, Ratio::new(1, 4)),
        (Some(400), Some(2050), 0, Ratio::new(400, 4 * 31)),
        (Some(301), Some(2022), 1, Ratio::new(300, 4 * 3)),
        (Some(230), Some(2035), 17, Ratio::new(213, 4 * 16)),
    ];
    for (target, year, generation, expected) in cases {
        let input = RpsInput::new(target.map(q), year, q(generation)).map_err(|e| e.to_string())?;
        let got = rps_score(&input).map_err(|e| e.to_string())?;
        // Both parts are exact below 2^53, so this division is the correctly rounded value.
        let want = *expected.numer() as f64 / *expected.denom() as f64;
        check(got == want, || {
            format!("{target:?}/{year:?}/{generation}: {got} != {want}")
        })?;
    }
    check(
        rps_score(&RpsInput::new(Some(50.0), None, 20.0).unwrap()).is_err(),
        || "unmet target without a year must be an error".into(),
    )?;
    within(started, Duration::from_secs(1))
}

fn nem_exhaustive() -> Result<(), String> {
    let mut seen = 0;
    let (mut lo, mut hi) = (u8::MAX, 0);
    for m in 0..=4u8 {
        for c in 0..=1u8 {
            for s in 0..=1u8 {
                for p in 0..=1u8 {
                    for r in 0..=2u8 {
                        let got = nem_score(
                            &NemComponents::new(m, c, s, p, r).map_err(|e| e.to_string())?,
                        );
                        check(got == m + c + s + p + r, || {
                            format!("{m}{c}{s}{p}{r}: {got}")
                        })?;
                        lo = lo.min(got);
                        hi = hi.max(got);
                        seen += 1;
                    }
                }
            }
        }
    }
    check(seen == 120 && NemComponents::all().count() == 120, || {
        format!("{seen} combinations")
    })?;
    check((lo, hi) == (0, 9), || format!("range {lo}..{hi}"))
}

// ---------------------------------------------------------------- aggregation

fn aggregation_oracle() -> Result<(), String> {
    let started = Instant::now();
    let mut r = common::rng(2020);
    let states: Vec<StateCode> = StateCode::all().collect();
    // Per-state positive rates spread over (0, 1) so scores differ.
    let rates: Vec<f64> = (0..51).map(|i| 0.05 + 0.9 * i as f64 / 50.0).collect();
    let labeled: Vec<(StateCode, bool)> = (0..10_000)
        .map(|i| {
            let s = if i < 51 { i } else { r.random_range(0..51) };
            (states[s], r.random_bool(rates[s]))
        })
        .collect();
    let pop =
        Population::load(common::data_dir().join("population.csv")).map_err(|e| e.to_string())?;
    let scores = scores_from_tallies(&tally_states(labeled.iter().copied()), &pop)
        .map_err(|e| e.to_string())?;
    check(scores.len() == 51, || format!("{} states", scores.len()))?;

    let mut counts: BTreeMap<StateCode, (u64, u64)> = BTreeMap::new();
    for (s, p) in &labeled {
        let e = counts.entry(*s).or_default();
        e.0 += 1;
        e.1 += *p as u64;
    }
    for s in &scores {
        let (n, k) = counts[&s.state];
        let want = 10.0 * k as f64 / n as f64;
        check((s.score - want).abs() <= 1e-12 && s.n_tweets == n, || {
            format!("{}: {} vs {want}", s.state.code(), s.score)
        })?;
    }

    let total_pos = labeled.iter().filter(|(_, p)| *p).count() as f64;
    let weighted = 10.0 * total_pos / labeled.len() as f64;
    let state_mean = counts
        .values()
        .map(|(n, k)| 10.0 * *k as f64 / *n as f64)
        .sum::<f64>()
        / 51.0;
    let got_w = national_average(&scores, AverageMode::TweetWeighted).map_err(|e| e.to_string())?;
    let got_m = national_average(&scores, AverageMode::StateMean).map_err(|e| e.to_string())?;
    check((got_w - weighted).abs() <= 1e-12, || {
        format!("tweet-weighted {got_w} vs {weighted}")
    })?;
    check((got_m - state_mean).abs() <= 1e-12, || {
        format!("state mean {got_m} vs {state_mean}")
    })?;

    let trials = 2000;
    let covered = (0..trials)
        .filter(|_| {
            let k = (0..100).filter(|_| r.random_bool(0.8)).count() as u64;
            let (lo, hi) = wilson_interval(k, 100, Z_95);
            lo <= 0.8 && 0.8 <= hi
        })
        .count();
    let coverage = covered as f64 / trials as f64;
    check((0.93..=0.97).contains(&coverage), || {
        format!("Wilson coverage {coverage}")
    })?;
    within(started, Duration::from_secs(30))
}

// ---------------------------------------------------------------- regression

fn matrix(xs: &[Vec<f64>]) -> DataMatrix {
    DataMatrix::new(
        xs.iter()
            .enumerate()
            .map(|(j, c)| (format!("x{j}"), c.clone()))
            .collect(),
    )
    .unwrap()
}

fn ols_equivalence() -> Result<(), String> {
    let mut r = common::rng(51);
    for instance in 0..100 {
        let (y, xs) = common::random_design(&mut r, 51, 7);
        let got = ols(&y, &matrix(&xs), RobustFlavor::Hc1).map_err(|e| e.to_string())?;
        let want = common::ols_oracle(&y, &xs);
        for (j, c) in got.coefficients.iter().enumerate() {
            check(
                rel(c.estimate, want.beta[j], 1e-8)
                    && rel(c.se, want.se[j], 1e-8)
                    && rel(c.robust_se, want.hc1[j], 1e-8),
                || format!("instance {instance}, term {j}: {c:?}"),
            )?;
        }
        check(rel(got.r_squared, want.r2, 1e-8), || {
            format!("instance {instance}: R2 {} vs {}", got.r_squared, want.r2)
        })?;

        let v = vif(&matrix(&xs)).map_err(|e| e.to_string())?;
        for j in 0..xs.len() {
            let others: Vec<Vec<f64>> = xs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, c)| c.clone())
                .collect();
            let want = 1.0 / (1.0 - common::ols_oracle(&xs[j], &others).r2);
            check(rel(v.values[j], want, 1e-10), || {
                format!("instance {instance}: VIF {j} {} vs {want}", v.values[j])
            })?;
        }
    }
    let (y, mut xs) = common::random_design(&mut r, 51, 6);
    xs.push(xs[1].iter().zip(&xs[4]).map(|(a, b)| a + 3.0 * b).collect());
    match ols(&y, &matrix(&xs), RobustFlavor::Hc1) {
        Err(StatsError::RankDeficient(name)) if name == "x6" => Ok(()),
        other => Err(format!("collinear design gave {other:?}")),
    }
}

fn anova_fixture() -> Result<(), String> {
    let mut r = common::rng(47);
    let sizes = [9, 12, 17, 13];
    let means = [7.2, 7.9, 7.4, 8.1];
    let groups: Vec<Vec<f64>> = sizes
        .iter()
        .zip(means)
        .map(|(&n, m)| (0..n).map(|_| m + r.random_range(-1.5..1.5)).collect())
        .collect();
    let labeled: Vec<Group> = ["Northeast", "Midwest", "South", "West"]
        .iter()
        .zip(&groups)
        .map(|(l, g)| Group::new(*l, g.clone()))
        .collect();
    let a = oneway_anova(&labeled).map_err(|e| e.to_string())?;
    check((a.df_between, a.df_within) == (3, 47), || {
        format!("df ({}, {})", a.df_between, a.df_within)
    })?;

    let all: Vec<f64> = groups.concat();
    let grand = common::mean(&all);
    let ssb: f64 = groups
        .iter()
        .map(|g| g.len() as f64 * (common::mean(g) - grand).powi(2))
        .sum();
    let ssw: f64 = groups
        .iter()
        .map(|g| {
            let m = common::mean(g);
            g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    let f = (ssb / 3.0) / (ssw / 47.0);
    check(rel(a.f, f, 1e-10), || format!("F {} vs {f}", a.f))?;
    check(a.pairwise.len() == 6, || {
        format!("{} pairs", a.pairwise.len())
    })?;
    for p in &a.pairwise {
        check(p.p_bonferroni == (6.0 * p.p_raw).min(1.0), || {
            format!("{p:?}")
        })?;
    }

    // Spreads differ by a factor of 10, variances by 100.
    let spread: Vec<Vec<f64>> = [(1.0, 15), (10.0, 15), (3.0, 11), (1.0, 10)]
        .iter()
        .map(|&(sd, n)| (0..n).map(|_| sd * r.random_range(-1.0..1.0)).collect())
        .collect();
    let b = bartlett(
        &spread
            .iter()
            .enumerate()
            .map(|(i, g)| Group::new(i.to_string(), g.clone()))
            .collect::<Vec<_>>(),
    )
    .map_err(|e| e.to_string())?;
    let want = common::bartlett_oracle(&spread);
    check(rel(b.statistic, want, 1e-10), || {
        format!("Bartlett {} vs {want}", b.statistic)
    })?;
    check(b.p < 0.001, || format!("Bartlett p {}", b.p))
}

// ---------------------------------------------------------------- filter chain

fn post(id: String, text: &str) -> RawPost {
    RawPost {
        id,
        text: text.to_string(),
        quoted_text: None,
        extended_text: None,
        screen_name: "someone".into(),
        user_description: String::new(),
        user_location: None,
        latitude: None,
        longitude: None,
        created_at: Utc.with_ymd_and_hms(2020, 4, 1, 12, 0, 0).unwrap(),
        is_retweet: false,
    }
}

fn filter_chain_planted() -> Result<(), String> {
    let chain = FilterChain {
        keywords: PhraseMatcher::new(["solar", "solar panel", "photovoltaic"])
            .map_err(|e| e.to_string())?,
        stopphrases: PhraseMatcher::new(["solar eclipse", "solar system"])
            .map_err(|e| e.to_string())?,
    };
    let mut records: Vec<Result<RawPost, Rejected>> = Vec::new();
    let mut expected = Vec::new();
    for i in 0..200usize {
        let id = format!("p{i}");
        let p = match i % 8 {
            0 => post(id.clone(), "New SOLAR Panel on the roof"),
            1 => post(id.clone(), "wind turbines all the way"),
            2 => post(id.clone(), "watching the solar eclipse tonight"),
            3 => {
                let mut p = post(id.clone(), "great day at the beach");
                p.screen_name = "Solar_Installer".into();
                p
            }
            4 => {
                let mut p = post(id.clone(), "look at this");
                p.quoted_text = Some("photovoltaic prices keep falling".into());
                p
            }
            5 => post(
                format!("p{}", i - 5),
                "solar again, same id as an earlier keeper",
            ),
            6 => {
                let mut p = post(id.clone(), "our solar system has eight planets");
                p.user_description = "solar fan".into();
                p
            }
            _ => {
                let mut p = post(id.clone(), "RT: solar is cheap now");
                p.is_retweet = true;
                p
            }
        };
        if matches!(i % 8, 0 | 4 | 7) {
            expected.push(id);
        }
        records.push(Ok(p));
    }
    records.insert(
        37,
        Err(Rejected {
            line: 38,
            reason: "invalid JSON".into(),
        }),
    );
    let (kept, report) = chain.run(records);
    let got: Vec<String> = kept.into_iter().map(|p| p.id).collect();
    check(got == expected, || {
        format!("retained {} ids, expected {}", got.len(), expected.len())
    })?;
    check(report.reconciles(), || format!("{report:?}"))?;
    let want = (1, 200, 175, 50, 25, 25, 75);
    let seen = (
        report.n_malformed,
        report.n_input,
        report.n_keyword_matched,
        report.n_excluded_irrelevant,
        report.n_excluded_profile_only,
        report.n_deduped,
        report.n_retained,
    );
    check(seen == want, || format!("{seen:?} != {want:?}"))
}

// ---------------------------------------------------------------- geolocation

const PROFILES: [(&str, &str); 60] = [
    ("Denver, CO", "CO"),
    ("Austin, TX", "TX"),
    ("Portland, OR", "OR"),
    ("Portland, ME", "ME"),
    ("Boise, Idaho", "ID"),
    ("Seattle WA", "WA"),
    ("San Francisco, California", "CA"),
    ("Bay Area", "CA"),
    ("NYC", "NY"),
    ("Brooklyn, NY", "NY"),
    ("Washington, D.C.", "DC"),
    ("Washington DC", "DC"),
    ("Philly", "PA"),
    ("NOLA", "LA"),
    ("Miami, FL 33101", "FL"),
    ("Phoenix, AZ, USA", "AZ"),
    ("Salt Lake City, Utah", "UT"),
    ("Las Vegas", "NV"),
    ("Chicago", "IL"),
    ("Detroit, Michigan", "MI"),
    ("Columbus, Ohio", "OH"),
    ("Atlanta, GA", "GA"),
    ("Nashville, TN", "TN"),
    ("Minneapolis", "MN"),
    ("Kansas", "KS"),
    ("Vermont", "VT"),
    ("New Mexico", "NM"),
    ("West Virginia", "WV"),
    ("North Carolina", "NC"),
    ("south dakota", "SD"),
    ("Honolulu, HI", "HI"),
    ("Anchorage, Alaska", "AK"),
    ("Indianapolis, IN", "IN"),
    ("Oklahoma City", "OK"),
    ("Wilmington, DE", "DE"),
    ("Montana", "MT"),
    ("Cheyenne, Wyoming", "WY"),
    ("Omaha, NE", "NE"),
    ("Iowa", "IA"),
    ("Little Rock, AR", "AR"),
    ("Jackson, Mississippi", "MS"),
    ("Birmingham, Alabama", "AL"),
    ("Louisville, KY", "KY"),
    ("Richmond, VA", "VA"),
    ("Baltimore, MD", "MD"),
    ("Newark, New Jersey", "NJ"),
    ("Hartford, CT", "CT"),
    ("Providence, Rhode Island", "RI"),
    ("Boston, Mass", "MA"),
    ("New Hampshire", "NH"),
    ("Milwaukee, WI", "WI"),
    ("Fargo, North Dakota", "ND"),
    ("Charleston, SC", "SC"),
    ("St. Louis, Missouri", "MO"),
    ("Toronto, Canada", "--"),
    ("London, UK", "--"),
    ("somewhere over the rainbow", "??"),
    ("USA", "??"),
    ("here or there", "??"),
    ("", "??"),
];

const COORDINATES: [((f64, f64), &str); 20] = [
    ((39.74, -104.99), "CO"),
    ((30.27, -97.74), "TX"),
    ((47.61, -122.33), "WA"),
    ((33.45, -112.07), "AZ"),
    ((41.88, -87.63), "IL"),
    ((25.76, -80.19), "FL"),
    ((44.98, -93.27), "MN"),
    ((36.17, -115.14), "NV"),
    ((40.76, -111.89), "UT"),
    ((35.47, -97.52), "OK"),
    ((43.07, -89.40), "WI"),
    ((33.75, -84.39), "GA"),
    ((46.81, -100.78), "ND"),
    ((61.22, -149.90), "AK"),
    ((21.31, -157.86), "HI"),
    ((43.62, -116.20), "ID"),
    ((38.58, -121.49), "CA"),
    ((48.85, 2.35), "--"),
    ((51.51, -0.13), "--"),
    ((26.0, -91.0), "??"),
];

fn outcome(label: &str) -> GeoOutcome {
    match label {
        "--" => GeoOutcome::NonUs,
        "??" => GeoOutcome::Unknown,
        s => GeoOutcome::State(code(s)),
    }
}

fn geolocation_fixture() -> Result<(), String> {
    let g = common::gazetteer();
    for (profile, label) in PROFILES {
        let got = g.resolve(Some(profile), None).0;
        check(got == outcome(label), || {
            format!("{profile:?}: {got:?}, expected {label}")
        })?;
    }
    for (coords, label) in COORDINATES {
        let got = g.resolve(None, Some(coords)).0;
        check(got == outcome(label), || {
            format!("{coords:?}: {got:?}, expected {label}")
        })?;
    }
    check(g.states().len() == 51, || "gazetteer lacks states".into())?;
    for s in g.states() {
        let got = g.resolve(None, Some(s.centroid)).0;
        check(got == GeoOutcome::State(s.code), || {
            format!("centroid of {}: {got:?}", s.code.code())
        })?;
    }
    // Coordinates outrank a profile naming another state.
    for ((coords, label), (profile, _)) in
        COORDINATES[..17].iter().zip(PROFILES.iter().rev().skip(6))
    {
        let got = g.resolve(Some(profile), Some(*coords));
        check(got == (outcome(label), GeoMethod::Coordinates), || {
            format!("{profile:?} with {coords:?}: {got:?}")
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- baseline classifier

fn baseline_separable() -> Result<(), String> {
    let rows = common::separable_corpus(1000, 5);
    let ex = parse_annotations(&common::annotations_tsv(&rows))
        .map_err(|e| e.to_string())?
        .examples;
    let spec = SplitSpec::with_seed(5);
    let parts = classify::split(&ex, &spec).map_err(|e| e.to_string())?;
    let cfg = BaselineConfig {
        seed: 5,
        ..Default::default()
    };
    let started = Instant::now();
    let mut model =
        BaselineModel::train(&parts.train, &parts.dev, &cfg).map_err(|e| e.to_string())?;
    within(started, Duration::from_secs(30))?;

    let texts: Vec<NormalizedText> = parts
        .test
        .iter()
        .map(|e| NormalizedText::new(e.id.clone(), &e.text))
        .collect();
    let probs = model.score(&texts).map_err(|e| e.to_string())?;
    let correct = probs
        .iter()
        .zip(&parts.test)
        .filter(|(p, e)| (**p >= 0.5) == e.label.is_positive())
        .count();
    let accuracy = correct as f64 / parts.test.len() as f64;
    check(accuracy >= 0.95, || format!("test accuracy {accuracy}"))?;

    let again = BaselineModel::train(&parts.train, &parts.dev, &cfg).map_err(|e| e.to_string())?;
    check(model.to_json() == again.to_json(), || {
        "retraining changed the model".into()
    })
}

// ---------------------------------------------------------------- end to end

fn pipeline_into(dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_solsent"))
        .args(["pipeline", "--config"])
        .arg(common::data_dir().join("demo/config.json"))
        .arg("--output-dir")
        .arg(dir)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })
}

fn end_to_end_determinism() -> Result<(), String> {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline_into(a.path())?;
    pipeline_into(b.path())?;
    for name in CSV_ARTIFACTS.iter().chain(&[
        "table3_excl.csv",
        "state_scores_excl.csv",
        "daily_series_excl.csv",
    ]) {
        let (x, y) = (fs::read(a.path().join(name)), fs::read(b.path().join(name)));
        check(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || {
            format!("{name} differs or is missing")
        })?;
    }
    let excl = fs::read_to_string(a.path().join("table3_excl.csv")).map_err(|e| e.to_string())?;
    let main = fs::read_to_string(a.path().join("table3.csv")).map_err(|e| e.to_string())?;
    check(
        excl.lines().next() == main.lines().next() && excl != main,
        || "exclusion rerun did not yield a distinct regression table".into(),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Result<(), String>);
    let criteria: [Criterion; 9] = [
        ("rps_oracle_suite", rps_oracle_suite),
        ("nem_exhaustive", nem_exhaustive),
        ("aggregation_oracle", aggregation_oracle),
        ("ols_equivalence", ols_equivalence),
        ("anova_fixture", anova_fixture),
        ("filter_chain_planted", filter_chain_planted),
        ("geolocation_fixture", geolocation_fixture),
        ("baseline_separable", baseline_separable),
        ("end_to_end_determinism", end_to_end_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("PASS {name} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
