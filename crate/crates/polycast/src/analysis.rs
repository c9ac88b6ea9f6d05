//! Scaling-law fitting, bias-variance decomposition with a synthetic
//! noiseless generator, and ensemble-weight credit-assignment matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::combine::EnsembleWeights;
use crate::series::{Frequency, FrequencyLabel, SeriesError, TimeSeries};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("point {index} is not finite and positive")]
    InvalidPoint { index: usize },
    #[error("all scales are equal; the log-log design is degenerate")]
    DegenerateDesign,
    #[error("need at least 2 model realizations, got {got}")]
    TooFewRealizations { got: usize },
    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: &'static str },
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },
    #[error("invalid generator config: {reason}")]
    InvalidSynthConfig { reason: String },
    #[error("runs disagree on the member list")]
    InconsistentMembers,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

// ---------------------------------------------------------------------------
// Scaling-law fits
// ---------------------------------------------------------------------------

/// Ordinary least squares fit of `ln(error)` on `ln(scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Log-log slope.
    pub alpha: f64,
    pub intercept: f64,
    /// Two-sided t-test p-value for the slope.
    pub p_value: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits `error ~ C * scale^alpha` by OLS in log-log space and tests the
/// slope against zero with an exact two-sided t-test.
pub fn fit_scaling_law(points: &[(f64, f64)]) -> Result<ScalingFit, AnalysisError> {
    let n = points.len();
    if n < 3 {
        return Err(AnalysisError::TooFewPoints { got: n, needed: 3 });
    }
    for (index, &(scale, error)) in points.iter().enumerate() {
        if !(scale.is_finite() && scale > 0.0 && error.is_finite() && error > 0.0) {
            return Err(AnalysisError::InvalidPoint { index });
        }
    }
    let (min_scale, max_scale) = points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &(s, _)| {
        (lo.min(s), hi.max(s))
    });
    if min_scale == max_scale {
        return Err(AnalysisError::DegenerateDesign);
    }

    let xs: Vec<f64> = points.iter().map(|&(s, _)| s.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
        syy += (y - y_mean) * (y - y_mean);
    }
    let alpha = sxy / sxx;
    let intercept = y_mean - alpha * x_mean;
    let sse = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let resid = y - intercept - alpha * x;
            resid * resid
        })
        .sum::<f64>()
        .max(0.0);
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let df = (n - 2) as f64;
    let se = (sse / df / sxx).sqrt();
    let p_value = if se == 0.0 {
        if alpha == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        student_t_two_sided_p(alpha / se, df)
    };
    Ok(ScalingFit {
        alpha,
        intercept,
        p_value,
        r_squared,
        n_points: n,
    })
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom, via the
/// regularized incomplete beta function.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation
    const COF: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Regularized incomplete beta `I_x(a, b)` via a Lentz continued fraction.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_cont_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FLOOR: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FLOOR {
        d = FLOOR;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FLOOR {
            d = FLOOR;
        }
        c = 1.0 + aa / c;
        if c.abs() < FLOOR {
            c = FLOOR;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FLOOR {
            d = FLOOR;
        }
        c = 1.0 + aa / c;
        if c.abs() < FLOOR {
            c = FLOOR;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Bias-variance decomposition
// ---------------------------------------------------------------------------

/// Squared-bias and variance components of the error of `realizations`
/// independently trained models, measured on noiseless truths.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasVarianceReport {
    /// `(bias, variance)` per test input.
    pub per_input: Vec<(f64, f64)>,
    pub aggregate_bias: f64,
    pub aggregate_variance: f64,
    pub realizations: usize,
}

/// Decomposes squared error per input: bias is the squared gap between the
/// mean forecast and the truth, variance is the mean squared spread of the
/// realizations around their mean. On noiseless truths the two components
/// sum to the mean squared error exactly.
pub fn estimate_bias_variance(
    realization_forecasts: &[Vec<f64>],
    truths: &[f64],
) -> Result<BiasVarianceReport, AnalysisError> {
    let m = realization_forecasts.len();
    if m < 2 {
        return Err(AnalysisError::TooFewRealizations { got: m });
    }
    if truths.is_empty() {
        return Err(AnalysisError::EmptyInput { what: "truths" });
    }
    if realization_forecasts.iter().any(|f| f.len() != truths.len()) {
        return Err(AnalysisError::ShapeMismatch {
            what: "realization forecasts vs truths",
        });
    }
    let mut per_input = Vec::with_capacity(truths.len());
    for (j, &truth) in truths.iter().enumerate() {
        let mean = realization_forecasts.iter().map(|f| f[j]).sum::<f64>() / m as f64;
        let bias = (mean - truth) * (mean - truth);
        let variance = realization_forecasts
            .iter()
            .map(|f| (f[j] - mean) * (f[j] - mean))
            .sum::<f64>()
            / m as f64;
        per_input.push((bias, variance));
    }
    let aggregate_bias = per_input.iter().map(|(b, _)| b).sum::<f64>() / per_input.len() as f64;
    let aggregate_variance =
        per_input.iter().map(|(_, v)| v).sum::<f64>() / per_input.len() as f64;
    Ok(BiasVarianceReport {
        per_input,
        aggregate_bias,
        aggregate_variance,
        realizations: m,
    })
}

// ---------------------------------------------------------------------------
// Synthetic noiseless generator
// ---------------------------------------------------------------------------

/// Configuration for the noiseless signal generator: a sum of `components`
/// sinusoids (periods uniform in `period_range`, amplitudes log-uniform in
/// `amplitude_range`, random phases) plus a linear trend and a constant
/// offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_series: usize,
    pub length: usize,
    pub horizon: usize,
    pub seed: u64,
    pub components: usize,
    pub period_range: (f64, f64),
    pub amplitude_range: (f64, f64),
    /// Trend slopes are uniform in `[-trend_scale, trend_scale]`, scaled by
    /// the midpoint of the amplitude range (or 1 when amplitudes are zero).
    pub trend_scale: f64,
    pub constant_range: (f64, f64),
}

impl SynthConfig {
    pub fn new(n_series: usize, length: usize, horizon: usize, seed: u64) -> Self {
        Self {
            n_series,
            length,
            horizon,
            seed,
            components: 3,
            period_range: (4.0, (length as f64 / 4.0).max(4.0)),
            amplitude_range: (0.5, 2.0),
            trend_scale: 0.1,
            constant_range: (-5.0, 5.0),
        }
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        let fail = |reason: &str| {
            Err(AnalysisError::InvalidSynthConfig {
                reason: reason.to_string(),
            })
        };
        if self.n_series == 0 || self.length == 0 || self.horizon == 0 {
            return fail("n_series, length, and horizon must be positive");
        }
        let (p_lo, p_hi) = self.period_range;
        if self.components > 0 {
            if !(p_lo >= 2.0 && p_hi >= p_lo) {
                return fail("period range must satisfy 2 <= lo <= hi");
            }
            if p_hi > self.length as f64 / 2.0 {
                return fail("length must cover at least two of the longest period");
            }
        }
        let (a_lo, a_hi) = self.amplitude_range;
        if !(a_lo >= 0.0 && a_hi >= a_lo) {
            return fail("amplitude range must satisfy 0 <= lo <= hi");
        }
        if self.trend_scale < 0.0 {
            return fail("trend scale must be nonnegative");
        }
        if self.constant_range.1 < self.constant_range.0 {
            return fail("constant range is inverted");
        }
        Ok(())
    }
}

/// One sinusoid of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidComponent {
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
}

/// The closed-form parameters behind one generated series.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalParams {
    pub constant: f64,
    pub trend_slope: f64,
    pub components: Vec<SinusoidComponent>,
}

impl SignalParams {
    /// Signal value at (continuous) time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut value = self.constant + self.trend_slope * t;
        for c in &self.components {
            value += c.amplitude * (std::f64::consts::TAU * t / c.period + c.phase).sin();
        }
        value
    }
}

/// A generated series with its exact noiseless continuation.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub series: TimeSeries,
    pub true_continuation: Vec<f64>,
    pub params: SignalParams,
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 over (seed, index) so per-series streams are independent of
    // generation order
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws `n_series` deterministic noiseless series and their exact
/// continuations. Fixing the seed fixes the output bit for bit.
pub fn generate_synthetic_noiseless(
    config: &SynthConfig,
) -> Result<Vec<SyntheticSeries>, AnalysisError> {
    config.validate()?;
    let amp_mid = 0.5 * (config.amplitude_range.0 + config.amplitude_range.1);
    let trend_base = if amp_mid > 0.0 { amp_mid } else { 1.0 };
    let mut out = Vec::with_capacity(config.n_series);
    for index in 0..config.n_series {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, index as u64));
        let constant = uniform(&mut rng, config.constant_range.0, config.constant_range.1);
        let trend_slope =
            uniform(&mut rng, -config.trend_scale, config.trend_scale) * trend_base;
        let components = (0..config.components)
            .map(|_| {
                let period = uniform(&mut rng, config.period_range.0, config.period_range.1);
                let amplitude = if config.amplitude_range.0 == config.amplitude_range.1 {
                    config.amplitude_range.0
                } else {
                    uniform(
                        &mut rng,
                        config.amplitude_range.0.max(1e-12).ln(),
                        config.amplitude_range.1.ln(),
                    )
                    .exp()
                };
                let phase = uniform(&mut rng, 0.0, std::f64::consts::TAU);
                SinusoidComponent {
                    amplitude,
                    period,
                    phase,
                }
            })
            .collect();
        let params = SignalParams {
            constant,
            trend_slope,
            components,
        };
        let values: Vec<f64> = (0..config.length).map(|t| params.eval(t as f64)).collect();
        let true_continuation: Vec<f64> = (config.length..config.length + config.horizon)
            .map(|t| params.eval(t as f64))
            .collect();
        let series = TimeSeries::new(
            format!("synth-{index:05}"),
            values,
            "0",
            Frequency::new(FrequencyLabel::Daily, 1)?,
            "synthetic",
        )?;
        out.push(SyntheticSeries {
            series,
            true_continuation,
            params,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Ensemble-weight credit assignment
// ---------------------------------------------------------------------------

/// One combination run: the weights fitted for one task, tagged with the
/// group the task belongs to.
#[derive(Debug, Clone)]
pub struct WeightRun {
    pub task_id: String,
    pub group_tag: String,
    pub weights: EnsembleWeights,
}

/// Which dimension the runs' group tags came from. Tags drive the row
/// grouping either way; the variant names the row axis in emitted tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightGrouping {
    BySpecialization,
    ByTaskGroup,
}

impl WeightGrouping {
    pub fn row_axis(&self) -> &'static str {
        match self {
            WeightGrouping::BySpecialization => "specialization",
            WeightGrouping::ByTaskGroup => "task_group",
        }
    }
}

/// Mean ensemble weight per (task group, member), rows normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major cells, `row_labels.len() * col_labels.len()`.
    pub cells: Vec<f64>,
}

impl WeightMatrix {
    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.col_labels.len();
        &self.cells[row * w..(row + 1) * w]
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.col_labels.len() + col]
    }
}

/// Aggregates runs into a task-group x member matrix: each cell is the mean
/// weight the group's tasks put on that member, with rows renormalized.
/// Group rows are ordered lexicographically.
pub fn weight_assignment_matrix(
    runs: &[WeightRun],
    _grouping: WeightGrouping,
) -> Result<WeightMatrix, AnalysisError> {
    let first = runs.first().ok_or(AnalysisError::EmptyInput { what: "runs" })?;
    let col_labels: Vec<String> = first.weights.member_ids().to_vec();
    for run in runs {
        if run.weights.member_ids() != col_labels.as_slice() {
            return Err(AnalysisError::InconsistentMembers);
        }
    }
    let mut row_labels: Vec<String> = runs.iter().map(|r| r.group_tag.clone()).collect();
    row_labels.sort();
    row_labels.dedup();

    let width = col_labels.len();
    let mut cells = vec![0.0f64; row_labels.len() * width];
    for (row, group) in row_labels.iter().enumerate() {
        let group_runs: Vec<&WeightRun> =
            runs.iter().filter(|r| &r.group_tag == group).collect();
        for run in &group_runs {
            for (col, w) in run.weights.weights().iter().enumerate() {
                cells[row * width + col] += w;
            }
        }
        let count = group_runs.len() as f64;
        for col in 0..width {
            cells[row * width + col] /= count;
        }
        let row_sum: f64 = cells[row * width..(row + 1) * width].iter().sum();
        if row_sum > 0.0 {
            for col in 0..width {
                cells[row * width + col] /= row_sum;
            }
        }
    }
    Ok(WeightMatrix {
        row_labels,
        col_labels,
        cells,
    })
}
