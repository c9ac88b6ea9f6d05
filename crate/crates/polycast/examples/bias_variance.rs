//! Bias-variance decomposition on noiseless synthetic signals.
//!
//! Eight AR(2) realizations, each fitted on a slightly perturbed copy of the
//! train data, forecast periodic signals they cannot represent: the error
//! they make is almost entirely bias, with realization variance orders of
//! magnitude smaller.
//!
//! ```bash
//! cargo run --example bias_variance
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use polycast::analysis::{estimate_bias_variance, generate_synthetic_noiseless, SynthConfig};
use polycast::baselines::ar_quantile;
use polycast::metrics::median_point;
use polycast::series::TimeSeries;

fn main() {
    let horizon = 12;
    let config = SynthConfig::new(200, 96, horizon, 7);
    let synthetic = generate_synthetic_noiseless(&config).unwrap();
    println!(
        "{} noiseless series of length {}, horizon {horizon}",
        config.n_series, config.length
    );

    let realizations = 8;
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let mut forecasts: Vec<Vec<f64>> = vec![Vec::new(); realizations];
    let mut truths = Vec::new();
    for synth in &synthetic {
        truths.extend_from_slice(&synth.true_continuation);
        for forecast in forecasts.iter_mut() {
            let jittered: Vec<f64> = synth
                .series
                .values
                .iter()
                .map(|v| v + rng.random_range(-0.05..0.05))
                .collect();
            let train = TimeSeries::new(
                synth.series.id.clone(),
                jittered,
                "0",
                synth.series.frequency,
                "synthetic",
            )
            .unwrap();
            let tensor = ar_quantile(&train, horizon, 2, &[0.5]).unwrap();
            forecast.extend_from_slice(median_point(&tensor).unwrap().values());
        }
    }

    let report = estimate_bias_variance(&forecasts, &truths).unwrap();
    let mse = report.aggregate_bias + report.aggregate_variance;
    println!("\nover {} realizations and {} inputs:", report.realizations, truths.len());
    println!("  bias      {:>12.4}", report.aggregate_bias);
    println!("  variance  {:>12.4}", report.aggregate_variance);
    println!("  mse       {:>12.4}  (bias + variance, noiseless truths)", mse);
    println!(
        "  bias / variance = {:.1}",
        report.aggregate_bias / report.aggregate_variance
    );
}
