//! Forecast accuracy metrics and aggregation.
//!
//! Two metrics rank and weight portfolio members: WQL, a scale-normalized
//! sum of pinball losses over the task's quantile grid, and MASE, forecast
//! MAE divided by the in-sample one-step seasonal-naive MAE. Per-dataset
//! errors are reported relative to a baseline and aggregated with a
//! geometric mean.

use thiserror::Error;

use crate::series::{PointMatrix, QuantileForecast, TimeSeries};

/// Floor applied to degenerate denominators (zero baselines, zero validation
/// scale) so ranking and aggregation stay total.
pub const SCALE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric undefined: {what} is zero")]
    ZeroScale { what: &'static str },
    #[error("quantile levels lie entirely on one side of 0.5; no median slice")]
    NoMedian,
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },
    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: &'static str },
    #[error("train series `{id}` too short for season length {season_length}")]
    TrainTooShort { id: String, season_length: usize },
}

/// Which loss a run uses for ranking, weighting, and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Weighted quantile loss over the full tensor.
    Wql,
    /// Mean absolute scaled error on the median slice.
    Mase,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Wql => "wql",
            MetricKind::Mase => "mase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wql" => Some(MetricKind::Wql),
            "mase" => Some(MetricKind::Mase),
            _ => None,
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One model's error on one dataset, next to the baseline's error.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetScore {
    pub dataset_id: String,
    pub metric: MetricKind,
    pub value: f64,
    pub baseline_value: f64,
}

/// Pinball (quantile) loss: `q*max(y-yhat, 0) + (1-q)*max(yhat-y, 0)`.
#[inline]
pub fn pinball_loss(y: f64, yhat: f64, q: f64) -> f64 {
    q * (y - yhat).max(0.0) + (1.0 - q) * (yhat - y).max(0.0)
}

/// Shared WQL accumulation: `2 * sum(pinball) / (n_levels * abs_sum)`.
///
/// Every WQL path in the crate funnels through this loop so that reported
/// losses, selection losses, and incremental ensemble losses are bitwise
/// identical for identical predictions.
#[inline]
pub(crate) fn wql_core(
    actuals: &[f64],
    abs_sum: f64,
    levels: &[f64],
    yhat: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for (cell, &y) in actuals.iter().enumerate() {
        for (qi, &q) in levels.iter().enumerate() {
            acc += pinball_loss(y, yhat(cell, qi), q);
        }
    }
    2.0 * acc / (levels.len() as f64 * abs_sum)
}

/// Shared MASE accumulation over per-item scalers.
#[inline]
pub(crate) fn mase_core(
    actuals: &[f64],
    scalers: &[f64],
    horizon: usize,
    yhat: impl Fn(usize) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (item, &scaler) in scalers.iter().enumerate() {
        let mut abs_err = 0.0;
        for t in 0..horizon {
            let cell = item * horizon + t;
            abs_err += (actuals[cell] - yhat(cell)).abs();
        }
        total += abs_err / horizon as f64 / scaler;
    }
    total / scalers.len() as f64
}

/// Weighted quantile loss of a forecast tensor against actuals.
///
/// Errors with `ZeroScale` when the actuals sum to zero in absolute value.
pub fn wql(forecast: &QuantileForecast, actuals: &PointMatrix) -> Result<f64, MetricError> {
    if forecast.n_items() != actuals.n_items() || forecast.horizon() != actuals.horizon() {
        return Err(MetricError::ShapeMismatch {
            what: "forecast tensor vs actuals",
        });
    }
    let abs_sum: f64 = actuals.values().iter().map(|y| y.abs()).sum();
    if abs_sum == 0.0 {
        return Err(MetricError::ZeroScale {
            what: "total absolute actuals",
        });
    }
    let n_levels = forecast.quantile_levels().len();
    let values = forecast.values();
    Ok(wql_core(
        actuals.values(),
        abs_sum,
        forecast.quantile_levels(),
        |cell, qi| values[cell * n_levels + qi],
    ))
}

/// In-sample one-step seasonal-naive MAE: `mean_{t>=m} |x_t - x_{t-m}|`.
pub(crate) fn seasonal_in_sample_mae(values: &[f64], season_length: usize) -> Option<f64> {
    if values.len() <= season_length {
        return None;
    }
    let diffs = values.len() - season_length;
    let sum: f64 = (season_length..values.len())
        .map(|t| (values[t] - values[t - season_length]).abs())
        .sum();
    Some(sum / diffs as f64)
}

/// Mean absolute scaled error of a point forecast, averaged across items.
/// `train` supplies the in-sample scaler for each item, in item order.
pub fn mase(
    point_forecast: &PointMatrix,
    actuals: &PointMatrix,
    train: &[TimeSeries],
    season_length: usize,
) -> Result<f64, MetricError> {
    if point_forecast.n_items() != actuals.n_items()
        || point_forecast.horizon() != actuals.horizon()
    {
        return Err(MetricError::ShapeMismatch {
            what: "point forecast vs actuals",
        });
    }
    if train.len() != actuals.n_items() {
        return Err(MetricError::ShapeMismatch {
            what: "train series count vs items",
        });
    }
    let scalers = mase_scalers(train, season_length, false)?;
    let forecast_values = point_forecast.values();
    Ok(mase_core(
        actuals.values(),
        &scalers,
        actuals.horizon(),
        |cell| forecast_values[cell],
    ))
}

/// Per-item seasonal scalers. With `clamp`, zero scalers are floored at
/// [`SCALE_EPSILON`] instead of erroring (used for selection, which must
/// stay total on degenerate windows).
pub(crate) fn mase_scalers(
    train: &[TimeSeries],
    season_length: usize,
    clamp: bool,
) -> Result<Vec<f64>, MetricError> {
    train
        .iter()
        .map(|series| {
            let scaler = seasonal_in_sample_mae(&series.values, season_length).ok_or_else(|| {
                MetricError::TrainTooShort {
                    id: series.id.clone(),
                    season_length,
                }
            })?;
            if scaler == 0.0 {
                if clamp {
                    Ok(SCALE_EPSILON)
                } else {
                    Err(MetricError::ZeroScale {
                        what: "in-sample seasonal-naive MAE",
                    })
                }
            } else {
                Ok(scaler)
            }
        })
        .collect()
}

/// The 0.5-level slice of a quantile tensor, interpolated linearly between
/// the two adjacent levels when 0.5 is not on the grid.
pub fn median_point(forecast: &QuantileForecast) -> Result<PointMatrix, MetricError> {
    let levels = forecast.quantile_levels();
    let n_levels = levels.len();
    let cells = forecast.n_items() * forecast.horizon();
    let values = forecast.values();

    if let Some(mid) = levels.iter().position(|&q| q == 0.5) {
        let out = (0..cells).map(|cell| values[cell * n_levels + mid]).collect();
        return PointMatrix::new(forecast.n_items(), forecast.horizon(), out)
            .map_err(|_| MetricError::ShapeMismatch { what: "median slice" });
    }
    let hi = levels
        .iter()
        .position(|&q| q > 0.5)
        .ok_or(MetricError::NoMedian)?;
    if hi == 0 {
        return Err(MetricError::NoMedian);
    }
    let lo = hi - 1;
    let w = (0.5 - levels[lo]) / (levels[hi] - levels[lo]);
    let out = (0..cells)
        .map(|cell| {
            let below = values[cell * n_levels + lo];
            let above = values[cell * n_levels + hi];
            below + w * (above - below)
        })
        .collect();
    PointMatrix::new(forecast.n_items(), forecast.horizon(), out)
        .map_err(|_| MetricError::ShapeMismatch { what: "median slice" })
}

/// Ratio of a model's error to the baseline's on the same dataset and
/// metric. Degenerate baselines are floored at [`SCALE_EPSILON`].
pub fn relative_error(model: &DatasetScore, baseline: &DatasetScore) -> f64 {
    debug_assert_eq!(model.dataset_id, baseline.dataset_id);
    debug_assert_eq!(model.metric, baseline.metric);
    model.value / baseline.value.max(SCALE_EPSILON)
}

/// Geometric mean of relative errors: `exp(mean(ln r))`. Inputs are floored
/// at [`SCALE_EPSILON`] before the log.
pub fn geometric_mean_aggregate(ratios: &[f64]) -> Result<f64, MetricError> {
    if ratios.is_empty() {
        return Err(MetricError::EmptyInput {
            what: "relative errors",
        });
    }
    let log_sum: f64 = ratios.iter().map(|r| r.max(SCALE_EPSILON).ln()).sum();
    Ok((log_sum / ratios.len() as f64).exp())
}

/// Scores quantile forecasts against one evaluation window.
///
/// Precomputes everything derived from the actuals (absolute scale, seasonal
/// scalers) so that a portfolio of candidate forecasts can be ranked
/// cheaply. To keep ranking total on degenerate windows, denominators are
/// floored at [`SCALE_EPSILON`]; the resulting positive rescaling never
/// changes an argmin.
#[derive(Debug, Clone)]
pub struct WindowScorer {
    kind: MetricKind,
    actuals: PointMatrix,
    levels: Vec<f64>,
    abs_sum: f64,
    scalers: Vec<f64>,
}

impl WindowScorer {
    /// WQL scorer for a window. `levels` is the grid candidates must carry.
    pub fn wql(actuals: PointMatrix, levels: Vec<f64>) -> Self {
        let abs_sum: f64 = actuals.values().iter().map(|y| y.abs()).sum();
        Self {
            kind: MetricKind::Wql,
            actuals,
            levels,
            abs_sum: if abs_sum > 0.0 { abs_sum } else { SCALE_EPSILON },
            scalers: Vec::new(),
        }
    }

    /// MASE scorer for a window; `train` supplies the in-sample scalers.
    pub fn mase(
        actuals: PointMatrix,
        train: &[TimeSeries],
        season_length: usize,
    ) -> Result<Self, MetricError> {
        if train.len() != actuals.n_items() {
            return Err(MetricError::ShapeMismatch {
                what: "train series count vs items",
            });
        }
        let scalers = mase_scalers(train, season_length, true)?;
        Ok(Self {
            kind: MetricKind::Mase,
            actuals,
            levels: Vec::new(),
            abs_sum: 0.0,
            scalers,
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// The per-candidate loss plane: the full tensor for WQL, the median
    /// slice for MASE. Combining planes linearly and scoring is exactly
    /// equivalent to combining tensors and scoring, because the median
    /// interpolation is linear in the values.
    pub fn plane(&self, forecast: &QuantileForecast) -> Result<Vec<f64>, MetricError> {
        if forecast.n_items() != self.actuals.n_items()
            || forecast.horizon() != self.actuals.horizon()
        {
            return Err(MetricError::ShapeMismatch {
                what: "forecast tensor vs scoring window",
            });
        }
        match self.kind {
            MetricKind::Wql => {
                if forecast.quantile_levels() != self.levels.as_slice() {
                    return Err(MetricError::ShapeMismatch {
                        what: "quantile levels vs scoring window",
                    });
                }
                Ok(forecast.values().to_vec())
            }
            MetricKind::Mase => Ok(median_point(forecast)?.values().to_vec()),
        }
    }

    /// Loss of a single plane.
    pub fn score_plane(&self, plane: &[f64]) -> f64 {
        self.score_scaled_sum(None, plane, 1.0)
    }

    /// Loss of a forecast tensor.
    pub fn score(&self, forecast: &QuantileForecast) -> Result<f64, MetricError> {
        Ok(self.score_plane(&self.plane(forecast)?))
    }

    /// Loss of the plane `(base + add) / div` without materializing it.
    /// With `base = None` and `div = 1.0` this scores `add` itself through
    /// the same accumulation loop, so both paths agree bitwise.
    pub fn score_scaled_sum(&self, base: Option<&[f64]>, add: &[f64], div: f64) -> f64 {
        match self.kind {
            MetricKind::Wql => {
                let n_levels = self.levels.len();
                match base {
                    Some(base) => wql_core(
                        self.actuals.values(),
                        self.abs_sum,
                        &self.levels,
                        |cell, qi| {
                            let idx = cell * n_levels + qi;
                            (base[idx] + add[idx]) / div
                        },
                    ),
                    None => wql_core(
                        self.actuals.values(),
                        self.abs_sum,
                        &self.levels,
                        |cell, qi| add[cell * n_levels + qi] / div,
                    ),
                }
            }
            MetricKind::Mase => match base {
                Some(base) => mase_core(
                    self.actuals.values(),
                    &self.scalers,
                    self.actuals.horizon(),
                    |cell| (base[cell] + add[cell]) / div,
                ),
                None => mase_core(
                    self.actuals.values(),
                    &self.scalers,
                    self.actuals.horizon(),
                    |cell| add[cell] / div,
                ),
            },
        }
    }
}
