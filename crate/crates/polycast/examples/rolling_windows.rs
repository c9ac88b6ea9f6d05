//! Rolling-origin evaluation: fit the ensemble on the first window only and
//! carry the fixed weights across the remaining windows.
//!
//! ```bash
//! cargo run --example rolling_windows
//! ```

use polycast::combine::{combine_forecasts, greedy_ensemble_selection};
use polycast::metrics::{wql, WindowScorer};
use polycast::portfolio::BuiltinModel;
use polycast::series::{rolling_windows, Frequency, FrequencyLabel, PointMatrix, TimeSeries};

fn main() {
    let values: Vec<f64> = (0..120)
        .map(|t| 30.0 + 5.0 * (std::f64::consts::TAU * t as f64 / 12.0).sin() + 0.02 * t as f64)
        .collect();
    let series = TimeSeries::new(
        "sensor",
        values,
        "0",
        Frequency::new(FrequencyLabel::Monthly, 12).unwrap(),
        "demo",
    )
    .unwrap();

    let horizon = 12;
    let splits = rolling_windows(&series, horizon, 4, horizon).unwrap();
    println!("{} rolling windows of {horizon} steps", splits.len());

    let task = polycast::series::ForecastTask::new(horizon, 12)
        .unwrap()
        .with_quantile_levels(vec![0.1, 0.5, 0.9])
        .unwrap();
    let models = [
        ("matched", BuiltinModel::SeasonalNaive { season_length: Some(12) }),
        ("short", BuiltinModel::SeasonalNaive { season_length: Some(5) }),
        ("drift", BuiltinModel::Drift),
    ];
    let forecast_window =
        |split: &polycast::series::EvaluationSplit| -> Vec<(String, _)> {
            models
                .iter()
                .map(|(id, model)| {
                    let f = model
                        .forecaster()
                        .forecast(std::slice::from_ref(&split.train), &task)
                        .unwrap();
                    (id.to_string(), f)
                })
                .collect()
        };

    // fit on the first window alone
    let first = &splits[0];
    let scorer = WindowScorer::wql(
        PointMatrix::from_rows(std::slice::from_ref(&first.validation_actuals)).unwrap(),
        task.quantile_levels.clone(),
    );
    let weights = greedy_ensemble_selection(&forecast_window(first), &scorer, 25).unwrap();
    for (id, w) in weights.member_ids().iter().zip(weights.weights()) {
        println!("  fitted weight {id:<8} {w:.2}");
    }

    // apply the fixed combination to every window
    println!("\n{:<8} {:>10}", "window", "wql");
    for (k, split) in splits.iter().enumerate() {
        let members = forecast_window(split);
        let combined = combine_forecasts(&weights, &members).unwrap();
        let actuals =
            PointMatrix::from_rows(&[split.test_actuals.clone().unwrap()]).unwrap();
        let loss = wql(&combined, &actuals).unwrap();
        println!("{k:<8} {loss:>10.4}");
    }
}
