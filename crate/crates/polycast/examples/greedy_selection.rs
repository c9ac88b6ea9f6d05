//! Fit ensemble weights with greedy selection and inspect the trace.
//!
//! Three members disagree about a validation window; greedy selection adds
//! one member per step (with replacement) to an equally-weighted ensemble,
//! so the final weights are exact multiples of 1/steps.
//!
//! ```bash
//! cargo run --example greedy_selection
//! ```

use polycast::combine::{combine_forecasts, greedy_ensemble_selection, select_best};
use polycast::metrics::WindowScorer;
use polycast::series::{PointMatrix, QuantileForecast};

fn member(id: &str, bias: f64, spread: f64) -> (String, QuantileForecast) {
    let levels = vec![0.1, 0.5, 0.9];
    let steps = (1..=4)
        .map(|t| {
            let center = 10.0 + t as f64 + bias;
            vec![center - spread, center, center + spread]
        })
        .collect();
    (
        id.to_string(),
        QuantileForecast::single_item("item", levels, steps).unwrap(),
    )
}

fn main() {
    let actuals = PointMatrix::from_rows(&[vec![11.0, 12.0, 13.0, 14.0]]).unwrap();
    let members = vec![
        member("optimist", 1.5, 1.0),
        member("pessimist", -1.8, 1.0),
        member("wide", 0.4, 4.0),
    ];
    let scorer = WindowScorer::wql(actuals, vec![0.1, 0.5, 0.9]);

    let selection = select_best(&members, &scorer).unwrap();
    println!("validation losses:");
    for (id, loss) in &selection.validation_losses {
        println!("  {id:<10} {loss:.4}");
    }
    println!("model selection picks `{}`\n", selection.chosen_member_id);

    let weights = greedy_ensemble_selection(&members, &scorer, 10).unwrap();
    println!(
        "greedy trace over 10 steps: {:?}",
        weights
            .trace()
            .iter()
            .map(|&m| members[m].0.as_str())
            .collect::<Vec<_>>()
    );
    for (id, w) in weights.member_ids().iter().zip(weights.weights()) {
        println!("  weight {id:<10} {w:.2}");
    }

    let ensemble = combine_forecasts(&weights, &members).unwrap();
    let ensemble_loss = scorer.score(&ensemble).unwrap();
    println!(
        "\nensemble validation WQL {ensemble_loss:.4} vs best single {:.4}",
        selection.chosen_loss()
    );
}
