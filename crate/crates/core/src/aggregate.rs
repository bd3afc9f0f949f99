//! State-level 0–10 sentiment scores with Wilson intervals, national averages,
//! per-capita volume and daily series.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::SentimentPrediction;
use crate::geolocate::{GeoResolution, StateCode};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Population { path: PathBuf, message: String },
    #[error("no population figure for {0}")]
    MissingPopulation(StateCode),
    #[error("prediction {0} has no state resolution")]
    Unresolved(String),
    #[error("no posts to aggregate")]
    Empty,
    #[error("exclusion range ends ({end}) before it starts ({start})")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

/// Resident population by state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    counts: BTreeMap<StateCode, u64>,
}

#[derive(Debug, Deserialize)]
struct PopulationRow {
    state_code: String,
    population: String,
}

impl Population {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (StateCode, u64)>) -> Population {
        Population {
            counts: pairs.into_iter().collect(),
        }
    }

    /// Reads `state_code,population`; `#` lines are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Population, AggregateError> {
        let path = path.as_ref();
        let err = |message: String| AggregateError::Population {
            path: path.to_path_buf(),
            message,
        };
        let body = std::fs::read_to_string(path).map_err(|source| AggregateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let mut counts = BTreeMap::new();
        for (i, row) in reader.deserialize::<PopulationRow>().enumerate() {
            let row = row.map_err(|e| err(format!("row {}: {e}", i + 1)))?;
            let state = StateCode::from_code(&row.state_code)
                .ok_or_else(|| err(format!("row {}: unknown state '{}'", i + 1, row.state_code)))?;
            let n: u64 = row
                .population
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    err(format!(
                        "row {}: population must be a positive integer",
                        i + 1
                    ))
                })?;
            if counts.insert(state, n).is_some() {
                return Err(err(format!("row {}: duplicate state {state}", i + 1)));
            }
        }
        Ok(Population { counts })
    }

    pub fn get(&self, state: StateCode) -> Option<u64> {
        self.counts.get(&state).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// `(low, high)` Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub n: u64,
    pub positive: u64,
}

impl Tally {
    pub fn add(&mut self, positive: bool) {
        self.n += 1;
        self.positive += positive as u64;
    }

    pub fn merge(&mut self, other: Tally) {
        self.n += other.n;
        self.positive += other.positive;
    }

    /// `10 * positive / n`.
    pub fn score(&self) -> Option<f64> {
        (self.n > 0).then(|| 10.0 * self.positive as f64 / self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSentiment {
    pub state: StateCode,
    pub n_tweets: u64,
    pub n_positive: u64,
    pub score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tweets_per_million: f64,
}

/// Counts per state from `(state, is_positive)` pairs.
pub fn tally_states(
    labeled: impl IntoIterator<Item = (StateCode, bool)>,
) -> BTreeMap<StateCode, Tally> {
    let mut out: BTreeMap<StateCode, Tally> = BTreeMap::new();
    for (state, positive) in labeled {
        out.entry(state).or_default().add(positive);
    }
    out
}

/// One row per state with at least one post, in state-code order.
pub fn scores_from_tallies(
    tallies: &BTreeMap<StateCode, Tally>,
    population: &Population,
) -> Result<Vec<StateSentiment>, AggregateError> {
    tallies
        .iter()
        .filter(|(_, t)| t.n > 0)
        .map(|(&state, t)| {
            let pop = population
                .get(state)
                .ok_or(AggregateError::MissingPopulation(state))?;
            let score = t.score().expect("n > 0");
            let (lo, hi) = wilson_interval(t.positive, t.n, Z_95);
            Ok(StateSentiment {
                state,
                n_tweets: t.n,
                n_positive: t.positive,
                score,
                ci_low: (10.0 * lo).min(score),
                ci_high: (10.0 * hi).max(score),
                tweets_per_million: 1e6 * t.n as f64 / pop as f64,
            })
        })
        .collect()
}

/// Joins predictions to state resolutions on post id and aggregates.
pub fn state_scores(
    predictions: &[SentimentPrediction],
    resolutions: &[GeoResolution],
    population: &Population,
) -> Result<Vec<StateSentiment>, AggregateError> {
    let states: HashMap<&str, Option<StateCode>> = resolutions
        .iter()
        .map(|r| (r.post_id.as_str(), r.outcome.state()))
        .collect();
    let mut labeled = Vec::with_capacity(predictions.len());
    for p in predictions {
        let state = states
            .get(p.post_id.as_str())
            .copied()
            .flatten()
            .ok_or_else(|| AggregateError::Unresolved(p.post_id.clone()))?;
        labeled.push((state, p.label.is_positive()));
    }
    scores_from_tallies(&tally_states(labeled), population)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    /// Every post weighs the same.
    TweetWeighted,
    /// Every state weighs the same.
    StateMean,
}

pub fn national_average(
    states: &[StateSentiment],
    mode: AverageMode,
) -> Result<f64, AggregateError> {
    let states: Vec<_> = states.iter().filter(|s| s.n_tweets > 0).collect();
    if states.is_empty() {
        return Err(AggregateError::Empty);
    }
    Ok(match mode {
        AverageMode::TweetWeighted => {
            let n: u64 = states.iter().map(|s| s.n_tweets).sum();
            let pos: u64 = states.iter().map(|s| s.n_positive).sum();
            10.0 * pos as f64 / n as f64
        }
        AverageMode::StateMean => states.iter().map(|s| s.score).sum::<f64>() / states.len() as f64,
    })
}

/// Inclusive range of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<DateRange, AggregateError> {
        if end < start {
            return Err(AggregateError::InvalidRange { start, end });
        }
        Ok(DateRange { start, end })
    }

    pub fn contains_day(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        self.contains_day(t.date_naive())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPoint {
    pub date: NaiveDate,
    pub n_tweets: u64,
    pub n_positive: u64,
    pub mean_score: f64,
}

/// One point per UTC day with at least one post, skipping excluded days.
pub fn daily_series(
    labeled: impl IntoIterator<Item = (DateTime<Utc>, bool)>,
    exclude: Option<&DateRange>,
) -> Result<Vec<DailyPoint>, AggregateError> {
    if let Some(r) = exclude {
        DateRange::new(r.start, r.end)?;
    }
    let mut days: BTreeMap<NaiveDate, Tally> = BTreeMap::new();
    for (t, positive) in labeled {
        let day = t.date_naive();
        if exclude.is_some_and(|r| r.contains_day(day)) {
            continue;
        }
        days.entry(day).or_default().add(positive);
    }
    Ok(days
        .into_iter()
        .map(|(date, t)| DailyPoint {
            date,
            n_tweets: t.n,
            n_positive: t.positive,
            mean_score: t.score().expect("n > 0"),
        })
        .collect())
}

pub fn write_state_scores_csv<W: Write>(
    rows: &[StateSentiment],
    out: W,
) -> Result<(), AggregateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "state",
        "score",
        "n",
        "ci_low",
        "ci_high",
        "tweets_per_million",
    ])?;
    for r in rows {
        w.write_record([
            r.state.code().to_string(),
            r.score.to_string(),
            r.n_tweets.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.tweets_per_million.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_daily_series_csv<W: Write>(
    points: &[DailyPoint],
    out: W,
) -> Result<(), AggregateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "n", "mean_score"])?;
    for p in points {
        w.write_record([
            p.date.to_string(),
            p.n_tweets.to_string(),
            p.mean_score.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
