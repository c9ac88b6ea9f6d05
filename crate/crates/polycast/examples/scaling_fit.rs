//! Log-log scaling fits: recover a planted power law exactly, then under
//! multiplicative noise, with slope significance from an exact t-test.
//!
//! ```bash
//! cargo run --example scaling_fit
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use polycast::analysis::fit_scaling_law;

fn main() {
    // error = 3 * scale^{-0.4}, exactly
    let exact: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let scale = 2.0f64.powi(i);
            (scale, 3.0 * scale.powf(-0.4))
        })
        .collect();
    let fit = fit_scaling_law(&exact).unwrap();
    println!(
        "exact law:  alpha = {:.6}  r2 = {:.6}  p = {:.2e}",
        fit.alpha, fit.r_squared, fit.p_value
    );

    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let noisy: Vec<(f64, f64)> = exact
        .iter()
        .map(|&(scale, error)| {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let gauss = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (scale, error * (0.08 * gauss).exp())
        })
        .collect();
    let fit = fit_scaling_law(&noisy).unwrap();
    println!(
        "8% noise:   alpha = {:.6}  r2 = {:.6}  p = {:.2e}  ({})",
        fit.alpha,
        fit.r_squared,
        fit.p_value,
        if fit.p_value < 0.05 {
            "significant at 5%"
        } else {
            "not significant"
        }
    );

    // a flat relationship should not be called significant
    let flat: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let scale = 2.0f64.powi(i);
            let u: f64 = rng.random_range(-0.1..0.1);
            (scale, 0.5 * (1.0 + u))
        })
        .collect();
    let fit = fit_scaling_law(&flat).unwrap();
    println!(
        "no law:     alpha = {:.6}  r2 = {:.6}  p = {:.2e}",
        fit.alpha, fit.r_squared, fit.p_value
    );
}
