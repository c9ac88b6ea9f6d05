//! Split a series into train / validation / test, forecast with the builtin
//! baselines, and score the results with WQL and MASE.
//!
//! ```bash
//! cargo run --example holdout_evaluation
//! ```

use polycast::baselines::{ar_quantile, drift, seasonal_naive};
use polycast::metrics::{mase, median_point, wql};
use polycast::series::{split_holdout, Frequency, FrequencyLabel, PointMatrix, TimeSeries};

fn main() {
    // two years of weekly-cycle data with a gentle ramp
    let values: Vec<f64> = (0..104)
        .map(|t| 50.0 + 8.0 * (std::f64::consts::TAU * t as f64 / 7.0).sin() + 0.05 * t as f64)
        .collect();
    let series = TimeSeries::new(
        "demand",
        values,
        "2024-01-01",
        Frequency::with_default_season(FrequencyLabel::Daily),
        "energy",
    )
    .expect("finite values");

    let horizon = 7;
    let split = split_holdout(&series, horizon, true).expect("long enough");
    println!(
        "series of {} observations -> train {}, validation {}, test {}",
        series.len(),
        split.train.len(),
        split.validation_actuals.len(),
        split.test_actuals.as_ref().unwrap().len(),
    );

    let levels = vec![0.1, 0.5, 0.9];
    let actuals = PointMatrix::from_rows(&[split.test_actuals.clone().unwrap()]).unwrap();
    // forecast the test window from everything before it
    let mut history = split.train.values.clone();
    history.extend_from_slice(&split.validation_actuals);
    let train = TimeSeries::new("demand", history, "2024-01-01", series.frequency, "energy")
        .unwrap();

    println!("\n{:<16} {:>10} {:>10}", "model", "wql", "mase");
    for (name, forecast) in [
        ("seasonal_naive", seasonal_naive(&train, horizon, 7, &levels).unwrap()),
        ("drift", drift(&train, horizon, &levels).unwrap()),
        ("ar(7)", ar_quantile(&train, horizon, 7, &levels).unwrap()),
    ] {
        let probabilistic = wql(&forecast, &actuals).unwrap();
        let point_error = mase(
            &median_point(&forecast).unwrap(),
            &actuals,
            std::slice::from_ref(&train),
            7,
        )
        .unwrap();
        println!("{name:<16} {probabilistic:>10.4} {point_error:>10.4}");
    }
}
