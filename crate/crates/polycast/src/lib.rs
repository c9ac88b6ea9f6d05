//! Portfolio forecasting engine: build, combine, and evaluate portfolios of
//! probabilistic time series forecasters.

pub mod analysis;
pub mod baselines;
pub mod cli;
pub mod combine;
pub mod compute;
pub mod harness;
pub mod metrics;
pub mod portfolio;
pub mod series;
