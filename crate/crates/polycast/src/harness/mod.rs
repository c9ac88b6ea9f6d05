//! Benchmark harness: manifest and dataset ingestion, run configuration,
//! and leaderboard assembly.

pub mod evaluate;
pub mod manifest;
pub mod tables;

pub use evaluate::{evaluate, Combiner, EvaluateOutcome, GroupBy, RunConfig};
pub use manifest::{
    load_manifest, load_series_csv, BenchmarkManifest, DatasetEntry, MissingPolicy,
};
pub use tables::Table;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::baselines::BaselineError;
use crate::combine::CombineError;
use crate::compute::ComputeError;
use crate::metrics::MetricError;
use crate::portfolio::PortfolioError;
use crate::series::SeriesError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("manifest error: {reason}")]
    Manifest { reason: String },
    #[error("dataset `{id}`: {reason}")]
    Dataset { id: String, reason: String },
    #[error("run configuration error: {reason}")]
    Config { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
    #[error(transparent)]
    Combine(#[from] CombineError),
    #[error(transparent)]
    Compute(#[from] ComputeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
