use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use super::{BackendConfig, ReportError};
use crate::classify::{
    self, AnnotatedExample, Annotations, BaselineConfig, BaselineModel, ClassifierBackend,
    ClassifyError, EvalMetrics, ExternalBackend, SplitSpec,
};
use crate::policyindex;
use crate::stats::{self, DataMatrix, RegressionResult, RobustFlavor};
use crate::textprep::{self, NormalizedText};

/// Metrics on the held-out test split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub backend_id: String,
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub neutral_dropped: usize,
    pub seed: u64,
    pub confusion: EvalMetrics,
}

impl MetricsReport {
    fn new(
        backend_id: &str,
        m: EvalMetrics,
        sizes: (usize, usize, usize),
        neutral_dropped: usize,
        seed: u64,
    ) -> Self {
        MetricsReport {
            backend_id: backend_id.to_string(),
            accuracy: m.accuracy,
            f1: m.f1,
            precision: m.precision,
            recall: m.recall,
            n_train: sizes.0,
            n_dev: sizes.1,
            n_test: sizes.2,
            neutral_dropped,
            seed,
            confusion: m,
        }
    }
}

pub struct TrainOutcome {
    pub model: BaselineModel,
    pub report: MetricsReport,
}

/// Examples with their text run through the same cleanup the corpus gets.
pub fn prepare_examples(annotations: &Annotations) -> Vec<AnnotatedExample> {
    annotations
        .examples
        .iter()
        .map(|e| AnnotatedExample {
            text: textprep::normalize(&e.text),
            ..e.clone()
        })
        .collect()
}

fn test_texts(test: &[AnnotatedExample]) -> Vec<NormalizedText> {
    test.iter()
        .map(|e| NormalizedText {
            source_id: e.id.clone(),
            value: e.text.clone(),
        })
        .collect()
}

/// Split, fit on train with dev early stopping, score the test split.
pub fn train_from_annotations(
    annotations: &Annotations,
    seed: u64,
) -> Result<TrainOutcome, ClassifyError> {
    let examples = prepare_examples(annotations);
    let parts = classify::split(&examples, &SplitSpec::with_seed(seed))?;
    let config = BaselineConfig {
        seed,
        ..BaselineConfig::default()
    };
    let mut model = BaselineModel::train(&parts.train, &parts.dev, &config)?;
    let preds = classify::score_batch(&mut model, &test_texts(&parts.test))?;
    let metrics = classify::evaluate(&preds, &parts.test)?;
    let report = MetricsReport::new(
        model.backend_id(),
        metrics,
        (parts.train.len(), parts.dev.len(), parts.test.len()),
        annotations.neutral_dropped,
        seed,
    );
    Ok(TrainOutcome { model, report })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ReportError> {
    let body = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, body).map_err(|source| ReportError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_train_baseline(
    annotations: &Path,
    model_out: &Path,
    metrics_out: Option<&Path>,
    seed: u64,
) -> Result<MetricsReport, ReportError> {
    let ann =
        classify::load_annotations(annotations).map_err(|e| ReportError::classify("train", e))?;
    let outcome =
        train_from_annotations(&ann, seed).map_err(|e| ReportError::classify("train", e))?;
    outcome.model.save(model_out).map_err(|e| match e {
        ClassifyError::Io { path, source } => ReportError::Output { path, source },
        e => ReportError::stage("train", e),
    })?;
    if let Some(p) = metrics_out {
        write_json(p, &outcome.report)?;
    }
    Ok(outcome.report)
}

/// Opens a ready-to-score backend. A baseline backend needs a model file here.
pub fn open_backend(
    backend: &BackendConfig,
    timeout: Duration,
) -> Result<Box<dyn ClassifierBackend>, ReportError> {
    let b: Box<dyn ClassifierBackend> = match backend {
        BackendConfig::Baseline { model: Some(path) } => {
            Box::new(BaselineModel::load(path).map_err(|e| ReportError::classify("classify", e))?)
        }
        BackendConfig::Baseline { model: None } => {
            return Err(ReportError::Config(
                "baseline backend requires a model file".into(),
            ))
        }
        BackendConfig::Command { command } => {
            let (program, args) = command
                .split_first()
                .ok_or_else(|| ReportError::Config("backend command is empty".into()))?;
            Box::new(ExternalBackend::spawn(program, args, timeout).map_err(ReportError::Backend)?)
        }
        BackendConfig::Tcp { address } => Box::new(
            ExternalBackend::connect(address.as_str(), timeout).map_err(ReportError::Backend)?,
        ),
    };
    Ok(b)
}

/// Scores the same test split `train-baseline` holds out, through any backend.
pub fn cmd_eval_backend(
    annotations: &Path,
    backend: &BackendConfig,
    seed: u64,
    timeout: Duration,
    batch_size: usize,
) -> Result<MetricsReport, ReportError> {
    let ann = classify::load_annotations(annotations)
        .map_err(|e| ReportError::classify("evaluate", e))?;
    let examples = prepare_examples(&ann);
    let parts = classify::split(&examples, &SplitSpec::with_seed(seed))
        .map_err(|e| ReportError::classify("evaluate", e))?;
    let mut b = open_backend(backend, timeout)?;
    let preds = classify::score_in_batches(b.as_mut(), &test_texts(&parts.test), batch_size)
        .map_err(|e| ReportError::classify("evaluate", e))?;
    let metrics = classify::evaluate(&preds, &parts.test)
        .map_err(|e| ReportError::classify("evaluate", e))?;
    Ok(MetricsReport::new(
        b.backend_id(),
        metrics,
        (parts.train.len(), parts.dev.len(), parts.test.len()),
        ann.neutral_dropped,
        seed,
    ))
}

/// Writes per-state RPS and net-metering scores as CSV; returns the row count.
pub fn cmd_index<W: Write>(policy: &Path, out: W) -> Result<usize, ReportError> {
    let profiles = policyindex::load_profiles(policy)
        .map_err(|e| ReportError::Input(format!("{}: {e}", policy.display())))?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| ReportError::stage("index", e);
    w.write_record([
        "state",
        "region",
        "rps_score",
        "nem_score",
        "nem_mechanism",
        "nem_cap",
        "nem_subscriber",
        "nem_compensation",
        "nem_rollover",
    ])
    .map_err(io)?;
    for p in &profiles {
        let n = &p.nem;
        w.write_record([
            p.state.code().to_string(),
            p.region.to_string(),
            p.rps_score.to_string(),
            p.nem_score.to_string(),
            n.mechanism().to_string(),
            n.cap().to_string(),
            n.subscriber().to_string(),
            n.compensation().to_string(),
            n.rollover().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| ReportError::stage("index", e))?;
    Ok(profiles.len())
}

/// Regresses column `y` on columns `xs` of a CSV file.
pub fn cmd_stats(
    data: &Path,
    y: &str,
    xs: &[&str],
    flavor: RobustFlavor,
) -> Result<RegressionResult, ReportError> {
    if xs.is_empty() {
        return Err(ReportError::Config(
            "at least one predictor column is required".into(),
        ));
    }
    let mut wanted = vec![y];
    wanted.extend_from_slice(xs);
    let m = DataMatrix::from_csv(data, &wanted).map_err(|e| ReportError::Input(e.to_string()))?;
    let x = m
        .select(xs)
        .map_err(|e| ReportError::Input(e.to_string()))?;
    stats::ols(m.column(y).expect("selected"), &x, flavor)
        .map_err(|e| ReportError::stage("stats", e))
}
