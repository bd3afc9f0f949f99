//! Binary sentiment classification: annotation loading, seeded splits,
//! evaluation metrics, the backend abstraction, a bag-of-words baseline and a
//! line-delimited JSON bridge to external scorers.

mod baseline;
pub mod protocol;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{BaselineConfig, BaselineModel, TrainingMetadata, BASELINE_BACKEND_ID};
pub use protocol::{serve, ExternalBackend, PROTOCOL_VERSION};

use crate::textprep::NormalizedText;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("annotations line {line}: {message}")]
    Annotation { line: usize, message: String },
    #[error("no examples")]
    NoExamples,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("need at least {needed} examples, found {found}")]
    TooFewExamples { needed: usize, found: usize },
    #[error("training set must contain both classes")]
    SingleClass,
    #[error("prediction/gold mismatch: {0}")]
    IdMismatch(String),
    #[error("model file: {0}")]
    Model(String),
    #[error("backend protocol violation{}: {message}", fmt_id(.id))]
    Protocol { id: Option<String>, message: String },
    #[error("backend timed out{}", fmt_id(.id))]
    Timeout { id: Option<String> },
    #[error("backend I/O: {0}")]
    BackendIo(#[from] std::io::Error),
}

fn fmt_id(id: &Option<String>) -> String {
    id.as_ref()
        .map(|i| format!(" (item {i})"))
        .unwrap_or_default()
}

impl ClassifyError {
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            ClassifyError::Protocol { .. }
                | ClassifyError::Timeout { .. }
                | ClassifyError::BackendIo(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    /// `p >= 0.5` is positive.
    pub fn from_probability(p: f64) -> Sentiment {
        if p >= 0.5 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sentiment::Positive
    }
}

/// One hand-labeled example. `id` is the 1-based line number in the source file
/// unless the caller assigns something else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub id: String,
    pub text: String,
    pub label: Sentiment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotations {
    pub examples: Vec<AnnotatedExample>,
    pub neutral_dropped: usize,
}

/// Parses `text<TAB>label` TSV (header required). Labels are case-insensitive;
/// `neutral` rows are dropped and counted.
pub fn parse_annotations(body: &str) -> Result<Annotations, ClassifyError> {
    let mut lines = body.lines().enumerate();
    let header = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(ClassifyError::NoExamples)?;
    let cols: Vec<String> = header
        .1
        .split('\t')
        .map(|c| c.trim().to_lowercase())
        .collect();
    if cols != ["text", "label"] {
        return Err(ClassifyError::Annotation {
            line: header.0 + 1,
            message: "header must be `text<TAB>label`".into(),
        });
    }
    let mut examples = Vec::new();
    let mut neutral_dropped = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| ClassifyError::Annotation {
                line: line_no,
                message: "expected two tab-separated columns".into(),
            })?;
        let label = match label.trim().to_lowercase().as_str() {
            "positive" => Sentiment::Positive,
            "negative" => Sentiment::Negative,
            "neutral" => {
                neutral_dropped += 1;
                continue;
            }
            other => {
                return Err(ClassifyError::Annotation {
                    line: line_no,
                    message: format!("unknown label '{other}'"),
                })
            }
        };
        examples.push(AnnotatedExample {
            id: line_no.to_string(),
            text: text.to_string(),
            label,
        });
    }
    if examples.is_empty() {
        return Err(ClassifyError::NoExamples);
    }
    Ok(Annotations {
        examples,
        neutral_dropped,
    })
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Annotations, ClassifyError> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|source| ClassifyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_annotations(&body)
}

/// Train/dev/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> SplitSpec {
        SplitSpec {
            seed,
            ..SplitSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let fr = [self.train, self.dev, self.test];
        if fr.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(ClassifyError::InvalidSplit(
                "fractions must be positive".into(),
            ));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ClassifyError::InvalidSplit(
                "fractions must sum to 1".into(),
            ));
        }
        Ok(())
    }

    /// `(train, dev, test)` sizes: floor for train and dev, the rest to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let dev = floor(self.dev).min(n - train);
        (train, dev, n - train - dev)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

pub const MIN_SPLIT_EXAMPLES: usize = 10;

/// Seeded shuffle then contiguous partition.
pub fn split<T: Clone>(examples: &[T], spec: &SplitSpec) -> Result<Split<T>, ClassifyError> {
    spec.validate()?;
    if examples.len() < MIN_SPLIT_EXAMPLES {
        return Err(ClassifyError::TooFewExamples {
            needed: MIN_SPLIT_EXAMPLES,
            found: examples.len(),
        });
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (n_train, n_dev, _) = spec.sizes(examples.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    Ok(Split {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentPrediction {
    pub post_id: String,
    pub p_positive: f64,
    pub label: Sentiment,
    pub backend_id: String,
}

impl SentimentPrediction {
    pub fn new(
        post_id: impl Into<String>,
        p_positive: f64,
        backend_id: impl Into<String>,
    ) -> SentimentPrediction {
        SentimentPrediction {
            post_id: post_id.into(),
            p_positive,
            label: Sentiment::from_probability(p_positive),
            backend_id: backend_id.into(),
        }
    }
}

/// Anything that maps normalized texts to positive-class probabilities.
pub trait ClassifierBackend {
    fn backend_id(&self) -> &str;

    /// One probability per item, in input order.
    fn score(&mut self, items: &[NormalizedText]) -> Result<Vec<f64>, ClassifyError>;
}

/// Scores a batch and wraps the probabilities as predictions.
pub fn score_batch(
    backend: &mut dyn ClassifierBackend,
    texts: &[NormalizedText],
) -> Result<Vec<SentimentPrediction>, ClassifyError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let probs = backend.score(texts)?;
    if probs.len() != texts.len() {
        return Err(ClassifyError::Protocol {
            id: None,
            message: format!("{} scores for {} items", probs.len(), texts.len()),
        });
    }
    let backend_id = backend.backend_id().to_string();
    texts
        .iter()
        .zip(probs)
        .map(|(t, p)| {
            if !(0.0..=1.0).contains(&p) {
                return Err(ClassifyError::Protocol {
                    id: Some(t.source_id.clone()),
                    message: format!("p_positive {p} outside [0, 1]"),
                });
            }
            Ok(SentimentPrediction::new(
                t.source_id.clone(),
                p,
                backend_id.clone(),
            ))
        })
        .collect()
}

/// Scores in chunks of `batch_size`, preserving order.
pub fn score_in_batches(
    backend: &mut dyn ClassifierBackend,
    texts: &[NormalizedText],
    batch_size: usize,
) -> Result<Vec<SentimentPrediction>, ClassifyError> {
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(batch_size.max(1)) {
        out.extend(score_batch(backend, chunk)?);
    }
    Ok(out)
}

/// Positive-class metrics and the confusion counts behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> EvalMetrics {
        let n = tp + fp + tn + fn_;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalMetrics {
            n,
            true_positive: tp,
            false_positive: fp,
            true_negative: tn,
            false_negative: fn_,
            accuracy: ratio(tp + tn, n),
            precision,
            recall,
            f1,
        }
    }
}

/// Compares predictions to gold labels joined on id. Both sides must cover
/// exactly the same ids.
pub fn evaluate(
    predictions: &[SentimentPrediction],
    gold: &[AnnotatedExample],
) -> Result<EvalMetrics, ClassifyError> {
    let mut labels: HashMap<&str, Sentiment> = HashMap::with_capacity(gold.len());
    for g in gold {
        if labels.insert(g.id.as_str(), g.label).is_some() {
            return Err(ClassifyError::IdMismatch(format!(
                "duplicate gold id {}",
                g.id
            )));
        }
    }
    if predictions.len() != gold.len() {
        return Err(ClassifyError::IdMismatch(format!(
            "{} predictions for {} gold examples",
            predictions.len(),
            gold.len()
        )));
    }
    let mut seen = HashSet::with_capacity(predictions.len());
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for p in predictions {
        let truth = *labels
            .get(p.post_id.as_str())
            .ok_or_else(|| ClassifyError::IdMismatch(format!("no gold label for {}", p.post_id)))?;
        if !seen.insert(p.post_id.as_str()) {
            return Err(ClassifyError::IdMismatch(format!(
                "duplicate prediction for {}",
                p.post_id
            )));
        }
        match (p.label, truth) {
            (Sentiment::Positive, Sentiment::Positive) => tp += 1,
            (Sentiment::Positive, Sentiment::Negative) => fp += 1,
            (Sentiment::Negative, Sentiment::Negative) => tn += 1,
            (Sentiment::Negative, Sentiment::Positive) => fn_ += 1,
        }
    }
    Ok(EvalMetrics::from_counts(tp, fp, tn, fn_))
}
