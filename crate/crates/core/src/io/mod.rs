//! Data ingestion, black-box access over a line protocol, and model files.

mod data;
mod model_file;
mod scaling;
mod subprocess;

pub use data::{load_csv, read_csv, write_csv, RawMatrix};
pub use model_file::{load_model, model_from_str, model_to_string, save_model, ModelFile, FORMAT_VERSION};
pub use scaling::{fit_scaling, ColumnScale, ScalingSpec};
pub use subprocess::{ScaledBlackBox, SubprocessBlackBox};

use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: u64, column: usize, msg: String },
    #[error("ragged rows: line {line} has {got} fields, expected {expected}")]
    RaggedRows { line: u64, expected: usize, got: usize },
    #[error("no variable feature columns")]
    NoFeatures,
    #[error("black box did not answer within {0:?}")]
    Timeout(Duration),
    #[error("black box reply {index} is not a number: {text:?}")]
    MalformedReply { index: usize, text: String },
    #[error("black box exited: {0}")]
    ChildExit(String),
    #[error("model file version {found:?} is not {FORMAT_VERSION}")]
    VersionMismatch { found: String },
    #[error("model file: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64
}

/// `1 − SSE/SST`. A constant target gives 1 when matched exactly and
/// `-inf` otherwise.
pub fn r2(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let n = truth.len().max(1) as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    let sst: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if sse == 0.0 {
        1.0
    } else {
        1.0 - sse / sst
    }
}
