//! Built-in lightweight forecasters: the seasonal-naive reference and cheap
//! statistical members for desk-scale portfolios.

use thiserror::Error;

use crate::series::{ForecastTask, QuantileForecast, SeriesError, TimeSeries};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("series `{id}` too short: length {length}, need at least {required}")]
    SeriesTooShort {
        id: String,
        length: usize,
        required: usize,
    },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A pluggable forecast source. Implementations are pure: the same train
/// set and task always produce the same tensor.
pub trait Forecaster: Send + Sync {
    fn name(&self) -> &str;

    /// Fits on the train set and predicts one tensor covering every series,
    /// in input order.
    fn forecast(
        &self,
        train: &[TimeSeries],
        task: &ForecastTask,
    ) -> Result<QuantileForecast, BaselineError>;
}

/// Repeats the last observed season: `yhat[h] = x[len - m + ((h-1) mod m)]`.
/// Every quantile level carries the point path.
pub fn seasonal_naive(
    train: &TimeSeries,
    horizon: usize,
    season_length: usize,
    quantile_levels: &[f64],
) -> Result<QuantileForecast, BaselineError> {
    let len = train.len();
    if len < season_length {
        return Err(BaselineError::SeriesTooShort {
            id: train.id.clone(),
            length: len,
            required: season_length,
        });
    }
    let season = &train.values[len - season_length..];
    let path: Vec<f64> = (0..horizon).map(|h| season[h % season_length]).collect();
    flat_quantiles(&train.id, &path, quantile_levels)
}

/// Linear extrapolation from the first to the last observation, flat
/// quantiles.
pub fn drift(
    train: &TimeSeries,
    horizon: usize,
    quantile_levels: &[f64],
) -> Result<QuantileForecast, BaselineError> {
    let len = train.len();
    if len < 2 {
        return Err(BaselineError::SeriesTooShort {
            id: train.id.clone(),
            length: len,
            required: 2,
        });
    }
    let first = train.values[0];
    let last = train.values[len - 1];
    let slope = (last - first) / (len - 1) as f64;
    let path: Vec<f64> = (1..=horizon).map(|h| last + slope * h as f64).collect();
    flat_quantiles(&train.id, &path, quantile_levels)
}

/// Least-squares AR(p) with intercept, iterated `horizon` steps ahead.
/// Quantiles are the point path plus empirical in-sample residual quantiles
/// (type-7), which makes them monotone by construction. A singular fit
/// falls back to the naive repeat (seasonal naive with season length 1).
pub fn ar_quantile(
    train: &TimeSeries,
    horizon: usize,
    order: usize,
    quantile_levels: &[f64],
) -> Result<QuantileForecast, BaselineError> {
    let len = train.len();
    if order == 0 || len < order + 2 {
        return Err(BaselineError::SeriesTooShort {
            id: train.id.clone(),
            length: len,
            required: order.max(1) + 2,
        });
    }
    let values = &train.values;
    let dim = order + 1;
    let mut xtx = vec![0.0f64; dim * dim];
    let mut xty = vec![0.0f64; dim];
    for t in order..len {
        // predictor row: [1, x[t-1], ..., x[t-order]]
        let mut row = Vec::with_capacity(dim);
        row.push(1.0);
        for lag in 1..=order {
            row.push(values[t - lag]);
        }
        for i in 0..dim {
            for j in 0..dim {
                xtx[i * dim + j] += row[i] * row[j];
            }
            xty[i] += row[i] * values[t];
        }
    }
    let coefs = match solve_linear_system(&mut xtx, &mut xty, dim) {
        Some(c) => c,
        None => return seasonal_naive(train, horizon, 1, quantile_levels),
    };

    // in-sample one-step residuals
    let mut residuals = Vec::with_capacity(len - order);
    for t in order..len {
        let mut fitted = coefs[0];
        for lag in 1..=order {
            fitted += coefs[lag] * values[t - lag];
        }
        residuals.push(values[t] - fitted);
    }
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let offsets: Vec<f64> = quantile_levels
        .iter()
        .map(|&q| empirical_quantile(&residuals, q))
        .collect();

    let mut window = values[len - order..].to_vec();
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut point = coefs[0];
        for lag in 1..=order {
            point += coefs[lag] * window[window.len() - lag];
        }
        if !point.is_finite() {
            return seasonal_naive(train, horizon, 1, quantile_levels);
        }
        steps.push(offsets.iter().map(|o| point + o).collect());
        window.push(point);
    }
    Ok(QuantileForecast::single_item(
        train.id.clone(),
        quantile_levels.to_vec(),
        steps,
    )?)
}

fn flat_quantiles(
    id: &str,
    path: &[f64],
    quantile_levels: &[f64],
) -> Result<QuantileForecast, BaselineError> {
    let steps = path
        .iter()
        .map(|&v| vec![v; quantile_levels.len()])
        .collect();
    Ok(QuantileForecast::single_item(
        id,
        quantile_levels.to_vec(),
        steps,
    )?)
}

/// Type-7 empirical quantile: linear interpolation of order statistics.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve_linear_system(a: &mut [f64], b: &mut [f64], dim: usize) -> Option<Vec<f64>> {
    let scale = a
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| {
                a[r1 * dim + col]
                    .abs()
                    .partial_cmp(&a[r2 * dim + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * dim + col].abs() <= 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for j in 0..dim {
                a.swap(col * dim + j, pivot_row * dim + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * dim + col];
        for row in col + 1..dim {
            let factor = a[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..dim {
                a[row * dim + j] -= factor * a[col * dim + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut solution = vec![0.0; dim];
    for row in (0..dim).rev() {
        let mut rhs = b[row];
        for j in row + 1..dim {
            rhs -= a[row * dim + j] * solution[j];
        }
        solution[row] = rhs / a[row * dim + row];
    }
    Some(solution)
}

fn clip_context(series: &TimeSeries, limit: Option<usize>) -> TimeSeries {
    match limit {
        Some(limit) if series.len() > limit => TimeSeries {
            id: series.id.clone(),
            values: series.values[series.len() - limit..].to_vec(),
            start: series.start.clone(),
            frequency: series.frequency,
            domain: series.domain.clone(),
        },
        _ => series.clone(),
    }
}

/// Seasonal naive as a portfolio member. `season_length: None` uses the
/// task's season length.
#[derive(Debug, Clone)]
pub struct SeasonalNaive {
    pub season_length: Option<usize>,
}

impl Forecaster for SeasonalNaive {
    fn name(&self) -> &str {
        "seasonal_naive"
    }

    fn forecast(
        &self,
        train: &[TimeSeries],
        task: &ForecastTask,
    ) -> Result<QuantileForecast, BaselineError> {
        let m = self.season_length.unwrap_or(task.season_length);
        let parts = train
            .iter()
            .map(|series| {
                seasonal_naive(
                    &clip_context(series, task.context_limit),
                    task.horizon,
                    m,
                    &task.quantile_levels,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QuantileForecast::stack(parts)?)
    }
}

/// Autoregressive member with empirical residual quantiles.
#[derive(Debug, Clone)]
pub struct ArQuantile {
    pub order: usize,
}

impl Forecaster for ArQuantile {
    fn name(&self) -> &str {
        "ar_quantile"
    }

    fn forecast(
        &self,
        train: &[TimeSeries],
        task: &ForecastTask,
    ) -> Result<QuantileForecast, BaselineError> {
        let parts = train
            .iter()
            .map(|series| {
                ar_quantile(
                    &clip_context(series, task.context_limit),
                    task.horizon,
                    self.order,
                    &task.quantile_levels,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QuantileForecast::stack(parts)?)
    }
}

/// Linear drift member.
#[derive(Debug, Clone)]
pub struct Drift;

impl Forecaster for Drift {
    fn name(&self) -> &str {
        "drift"
    }

    fn forecast(
        &self,
        train: &[TimeSeries],
        task: &ForecastTask,
    ) -> Result<QuantileForecast, BaselineError> {
        let parts = train
            .iter()
            .map(|series| {
                drift(
                    &clip_context(series, task.context_limit),
                    task.horizon,
                    &task.quantile_levels,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QuantileForecast::stack(parts)?)
    }
}
