//! Orchestration: run configuration, the end-to-end pipeline, standalone
//! commands and artifact writers (CSV tables, SVG charts, run manifest).

mod commands;
mod config;
mod pipeline;
pub mod svg;
pub mod tables;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    cmd_eval_backend, cmd_index, cmd_stats, cmd_train_baseline, open_backend, prepare_examples,
    train_from_annotations, MetricsReport, TrainOutcome,
};
pub use config::{BackendConfig, ConfigOverrides, RunConfig};
pub use pipeline::{run_pipeline, RunManifest, RunStatus, StageCounts, StageRecord, CSV_ARTIFACTS};

use crate::classify::ClassifyError;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{what} not found: {path}")]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("{0}")]
    Input(String),
    #[error("{stage} stage failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("backend failure: {0}")]
    Backend(ClassifyError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ReportError {
    /// 1 for bad input or config, 2 for a failed stage, 3 for a backend
    /// protocol failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Config(_) | ReportError::MissingPath { .. } | ReportError::Input(_) => 1,
            ReportError::Stage { .. } | ReportError::Output { .. } => 2,
            ReportError::Backend(_) => 3,
        }
    }

    pub(crate) fn classify(stage: &'static str, e: ClassifyError) -> ReportError {
        match e {
            e if e.is_backend_failure() => ReportError::Backend(e),
            ClassifyError::Io { path, .. } => ReportError::MissingPath { what: "file", path },
            e @ (ClassifyError::Annotation { .. }
            | ClassifyError::NoExamples
            | ClassifyError::TooFewExamples { .. }
            | ClassifyError::SingleClass
            | ClassifyError::Model(_)) => ReportError::Input(e.to_string()),
            e => ReportError::Stage {
                stage,
                message: e.to_string(),
            },
        }
    }

    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> ReportError {
        ReportError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}
