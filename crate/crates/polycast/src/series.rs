//! Core domain types: univariate series, forecast tasks, quantile-forecast
//! tensors, and the windowing used for validation and rolling evaluation.

use thiserror::Error;

/// The nine default quantile levels used when a task does not override them.
pub const DEFAULT_QUANTILE_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series `{id}` too short: length {length}, need at least {required}")]
    SeriesTooShort {
        id: String,
        length: usize,
        required: usize,
    },
    #[error("series `{id}` has a non-finite value at index {index}")]
    NonFiniteValue { id: String, index: usize },
    #[error("series `{id}` has no observations")]
    EmptySeries { id: String },
    #[error("quantile levels must be strictly increasing and inside (0, 1)")]
    InvalidQuantileLevels,
    #[error("{what} must be at least 1")]
    NonPositive { what: &'static str },
    #[error("forecast tensor size mismatch: expected {expected} values, got {got}")]
    TensorSizeMismatch { expected: usize, got: usize },
    #[error("forecast tensors disagree on {what}")]
    TensorShapeMismatch { what: &'static str },
}

/// Sampling frequency of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrequencyLabel {
    Yearly,
    Quarterly,
    Monthly,
    Weekly,
    Daily,
    Hourly,
    /// Sub-hourly resolution, e.g. `SubHourly { minutes: 15 }` for 15-minute data.
    SubHourly { minutes: u32 },
}

impl FrequencyLabel {
    /// Conventional season length for each frequency: yearly 1, quarterly 4,
    /// monthly 12, weekly 1, daily 7, hourly 24, sub-hourly one day of steps.
    pub fn default_season_length(&self) -> usize {
        match self {
            FrequencyLabel::Yearly => 1,
            FrequencyLabel::Quarterly => 4,
            FrequencyLabel::Monthly => 12,
            FrequencyLabel::Weekly => 1,
            FrequencyLabel::Daily => 7,
            FrequencyLabel::Hourly => 24,
            FrequencyLabel::SubHourly { minutes } => {
                ((1440.0 / (*minutes).max(1) as f64).round() as usize).max(1)
            }
        }
    }

    /// Parses labels such as `"daily"`, `"hourly"`, or `"15min"`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "yearly" | "y" => Some(FrequencyLabel::Yearly),
            "quarterly" | "q" => Some(FrequencyLabel::Quarterly),
            "monthly" | "m" => Some(FrequencyLabel::Monthly),
            "weekly" | "w" => Some(FrequencyLabel::Weekly),
            "daily" | "d" => Some(FrequencyLabel::Daily),
            "hourly" | "h" => Some(FrequencyLabel::Hourly),
            _ => {
                let digits = s.strip_suffix("min")?;
                let minutes: u32 = digits.parse().ok()?;
                if minutes == 0 || minutes >= 60 {
                    return None;
                }
                Some(FrequencyLabel::SubHourly { minutes })
            }
        }
    }

    pub fn as_str(&self) -> String {
        match self {
            FrequencyLabel::Yearly => "yearly".into(),
            FrequencyLabel::Quarterly => "quarterly".into(),
            FrequencyLabel::Monthly => "monthly".into(),
            FrequencyLabel::Weekly => "weekly".into(),
            FrequencyLabel::Daily => "daily".into(),
            FrequencyLabel::Hourly => "hourly".into(),
            FrequencyLabel::SubHourly { minutes } => format!("{minutes}min"),
        }
    }
}

/// Frequency label together with the season length used by seasonal models
/// and scaled error metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frequency {
    pub label: FrequencyLabel,
    pub season_length: usize,
}

impl Frequency {
    pub fn new(label: FrequencyLabel, season_length: usize) -> Result<Self, SeriesError> {
        if season_length == 0 {
            return Err(SeriesError::NonPositive {
                what: "season length",
            });
        }
        Ok(Self {
            label,
            season_length,
        })
    }

    /// Frequency with the conventional season length for `label`.
    pub fn with_default_season(label: FrequencyLabel) -> Self {
        Self {
            label,
            season_length: label.default_season_length(),
        }
    }
}

/// One univariate series. Values are finite after construction; missing
/// values are handled at load time, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub id: String,
    pub values: Vec<f64>,
    pub start: String,
    pub frequency: Frequency,
    pub domain: String,
}

impl TimeSeries {
    pub fn new(
        id: impl Into<String>,
        values: Vec<f64>,
        start: impl Into<String>,
        frequency: Frequency,
        domain: impl Into<String>,
    ) -> Result<Self, SeriesError> {
        let id = id.into();
        if values.is_empty() {
            return Err(SeriesError::EmptySeries { id });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFiniteValue { id, index });
        }
        Ok(Self {
            id,
            values,
            start: start.into(),
            frequency,
            domain: domain.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn season_length(&self) -> usize {
        self.frequency.season_length
    }

    /// Copy of this series restricted to `values[..end]`.
    fn prefix(&self, end: usize) -> TimeSeries {
        TimeSeries {
            id: self.id.clone(),
            values: self.values[..end].to_vec(),
            start: self.start.clone(),
            frequency: self.frequency,
            domain: self.domain.clone(),
        }
    }
}

/// What a forecaster is asked to produce: `horizon` future steps at each of
/// the `quantile_levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTask {
    pub horizon: usize,
    pub quantile_levels: Vec<f64>,
    pub season_length: usize,
    /// Maximum history a model may look at; `None` means unbounded.
    pub context_limit: Option<usize>,
}

impl ForecastTask {
    /// Task with the default nine equally spaced quantile levels 0.1..=0.9.
    pub fn new(horizon: usize, season_length: usize) -> Result<Self, SeriesError> {
        if horizon == 0 {
            return Err(SeriesError::NonPositive { what: "horizon" });
        }
        if season_length == 0 {
            return Err(SeriesError::NonPositive {
                what: "season length",
            });
        }
        Ok(Self {
            horizon,
            quantile_levels: DEFAULT_QUANTILE_LEVELS.to_vec(),
            season_length,
            context_limit: None,
        })
    }

    pub fn with_quantile_levels(mut self, levels: Vec<f64>) -> Result<Self, SeriesError> {
        validate_quantile_levels(&levels)?;
        self.quantile_levels = levels;
        Ok(self)
    }

    pub fn with_context_limit(mut self, limit: Option<usize>) -> Self {
        self.context_limit = limit;
        self
    }
}

pub(crate) fn validate_quantile_levels(levels: &[f64]) -> Result<(), SeriesError> {
    if levels.is_empty() {
        return Err(SeriesError::InvalidQuantileLevels);
    }
    for (i, &q) in levels.iter().enumerate() {
        if !(q > 0.0 && q < 1.0) {
            return Err(SeriesError::InvalidQuantileLevels);
        }
        if i > 0 && levels[i - 1] >= q {
            return Err(SeriesError::InvalidQuantileLevels);
        }
    }
    Ok(())
}

/// Dense tensor of quantile predictions, indexed by (item, step, level) in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileForecast {
    item_ids: Vec<String>,
    horizon: usize,
    quantile_levels: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileForecast {
    pub fn new(
        item_ids: Vec<String>,
        horizon: usize,
        quantile_levels: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if horizon == 0 {
            return Err(SeriesError::NonPositive { what: "horizon" });
        }
        validate_quantile_levels(&quantile_levels)?;
        let expected = item_ids.len() * horizon * quantile_levels.len();
        if values.len() != expected {
            return Err(SeriesError::TensorSizeMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            item_ids,
            horizon,
            quantile_levels,
            values,
        })
    }

    /// Single-item tensor from one row of values per step.
    pub fn single_item(
        item_id: impl Into<String>,
        quantile_levels: Vec<f64>,
        steps: Vec<Vec<f64>>,
    ) -> Result<Self, SeriesError> {
        let horizon = steps.len();
        let n_levels = quantile_levels.len();
        let mut values = Vec::with_capacity(horizon * n_levels);
        for row in &steps {
            if row.len() != n_levels {
                return Err(SeriesError::TensorSizeMismatch {
                    expected: n_levels,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(vec![item_id.into()], horizon, quantile_levels, values)
    }

    /// Concatenates per-item tensors into one multi-item tensor. All parts
    /// must share horizon and quantile levels.
    pub fn stack(parts: Vec<QuantileForecast>) -> Result<Self, SeriesError> {
        let first = parts.first().ok_or(SeriesError::TensorShapeMismatch {
            what: "item count (no parts to stack)",
        })?;
        let horizon = first.horizon;
        let levels = first.quantile_levels.clone();
        let mut item_ids = Vec::new();
        let mut values = Vec::new();
        for part in &parts {
            if part.horizon != horizon {
                return Err(SeriesError::TensorShapeMismatch { what: "horizon" });
            }
            if part.quantile_levels != levels {
                return Err(SeriesError::TensorShapeMismatch {
                    what: "quantile levels",
                });
            }
            item_ids.extend(part.item_ids.iter().cloned());
            values.extend_from_slice(&part.values);
        }
        Self::new(item_ids, horizon, levels, values)
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn quantile_levels(&self) -> &[f64] {
        &self.quantile_levels
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at (item, step, level index).
    pub fn value(&self, item: usize, step: usize, level_idx: usize) -> f64 {
        let n_levels = self.quantile_levels.len();
        self.values[(item * self.horizon + step) * n_levels + level_idx]
    }

    /// Quantile vector for one (item, step).
    pub fn level_slice(&self, item: usize, step: usize) -> &[f64] {
        let n_levels = self.quantile_levels.len();
        let base = (item * self.horizon + step) * n_levels;
        &self.values[base..base + n_levels]
    }

    /// True when every (item, step) quantile vector is non-decreasing.
    pub fn is_monotone(&self) -> bool {
        crossing_count(self) == 0
    }
}

/// Number of (item, step) pairs whose quantile vector decreases somewhere.
pub fn crossing_count(forecast: &QuantileForecast) -> usize {
    let n_levels = forecast.quantile_levels.len();
    forecast
        .values
        .chunks_exact(n_levels)
        .filter(|chunk| chunk.windows(2).any(|w| w[1] < w[0]))
        .count()
}

/// Isotonic correction of every quantile vector: a running maximum across
/// levels. Idempotent, and a no-op on tensors that are already monotone.
pub fn enforce_monotone_quantiles(forecast: &QuantileForecast) -> QuantileForecast {
    let n_levels = forecast.quantile_levels.len();
    let mut values = forecast.values.clone();
    for chunk in values.chunks_exact_mut(n_levels) {
        for i in 1..n_levels {
            if chunk[i] < chunk[i - 1] {
                chunk[i] = chunk[i - 1];
            }
        }
    }
    QuantileForecast {
        item_ids: forecast.item_ids.clone(),
        horizon: forecast.horizon,
        quantile_levels: forecast.quantile_levels.clone(),
        values,
    }
}

/// Dense items x horizon matrix of point values (actuals or point forecasts).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMatrix {
    n_items: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl PointMatrix {
    pub fn new(n_items: usize, horizon: usize, values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.len() != n_items * horizon {
            return Err(SeriesError::TensorSizeMismatch {
                expected: n_items * horizon,
                got: values.len(),
            });
        }
        Ok(Self {
            n_items,
            horizon,
            values,
        })
    }

    /// Builds from one row per item; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SeriesError> {
        let horizon = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(rows.len() * horizon);
        for row in rows {
            if row.len() != horizon {
                return Err(SeriesError::TensorShapeMismatch { what: "row length" });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), horizon, values)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.values[item * self.horizon..(item + 1) * self.horizon]
    }
}

/// Contiguous train / validation / optional test segments of one series.
#[derive(Debug, Clone)]
pub struct EvaluationSplit {
    pub train: TimeSeries,
    pub validation_actuals: Vec<f64>,
    pub test_actuals: Option<Vec<f64>>,
}

/// Holds out the last `horizon` observations as validation; with
/// `with_test`, the final `horizon` observations become the test segment
/// and validation is the `horizon` observations before it.
///
/// The train segment always keeps at least `season_length + 1` observations
/// so an in-sample seasonal scaler remains computable.
pub fn split_holdout(
    series: &TimeSeries,
    horizon: usize,
    with_test: bool,
) -> Result<EvaluationSplit, SeriesError> {
    if horizon == 0 {
        return Err(SeriesError::NonPositive { what: "horizon" });
    }
    let m = series.season_length();
    let holdout = if with_test { 2 * horizon } else { horizon };
    let required = holdout + m + 1;
    let len = series.len();
    if len < required {
        return Err(SeriesError::SeriesTooShort {
            id: series.id.clone(),
            length: len,
            required,
        });
    }
    let train_end = len - holdout;
    let validation_actuals = series.values[train_end..train_end + horizon].to_vec();
    let test_actuals = with_test.then(|| series.values[train_end + horizon..].to_vec());
    Ok(EvaluationSplit {
        train: series.prefix(train_end),
        validation_actuals,
        test_actuals,
    })
}

/// Rolling evaluation windows over the tail of a series. Window `k`
/// (0-based, chronological) covers indices
/// `[len - horizon - (n_windows-1-k)*stride, ..)` of length `horizon`;
/// its train segment is everything before it. The first window doubles as
/// the selection window, so `validation_actuals == test_actuals` in every
/// split.
pub fn rolling_windows(
    series: &TimeSeries,
    horizon: usize,
    n_windows: usize,
    stride: usize,
) -> Result<Vec<EvaluationSplit>, SeriesError> {
    if horizon == 0 {
        return Err(SeriesError::NonPositive { what: "horizon" });
    }
    if n_windows == 0 {
        return Err(SeriesError::NonPositive { what: "n_windows" });
    }
    if stride == 0 {
        return Err(SeriesError::NonPositive { what: "stride" });
    }
    let m = series.season_length();
    let required = horizon + (n_windows - 1) * stride + m + 1;
    let len = series.len();
    if len < required {
        return Err(SeriesError::SeriesTooShort {
            id: series.id.clone(),
            length: len,
            required,
        });
    }
    let mut splits = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let test_start = len - horizon - (n_windows - 1 - k) * stride;
        let window = series.values[test_start..test_start + horizon].to_vec();
        splits.push(EvaluationSplit {
            train: series.prefix(test_start),
            validation_actuals: window.clone(),
            test_actuals: Some(window),
        });
    }
    Ok(splits)
}
