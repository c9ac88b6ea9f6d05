//! Acceptance suite. Each test checks one release criterion against an
//! independent oracle or a pinned tolerance and prints one PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use polycast::analysis::{estimate_bias_variance, fit_scaling_law, generate_synthetic_noiseless, SynthConfig};
use polycast::baselines::{ar_quantile, Forecaster, SeasonalNaive};
use polycast::combine::{combine_forecasts, greedy_ensemble_selection, select_best};
use polycast::compute::{flops_forward, strategy_flops, ArchitectureProfile, Strategy, StrategyInputs};
use polycast::harness::{evaluate, BenchmarkManifest, Combiner, DatasetEntry, RunConfig};
use polycast::metrics::{mase, median_point, pinball_loss, wql, MetricKind, WindowScorer};
use polycast::portfolio::{
    ingest_external_forecasts, write_external_forecasts, BuiltinModel, MemberSource, Portfolio,
    PortfolioMember, Specialization,
};
use polycast::series::{
    enforce_monotone_quantiles, Frequency, FrequencyLabel, PointMatrix, QuantileForecast,
    TimeSeries,
};

fn report(criterion: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(passed, "[FAIL] {criterion}: {detail}");
}

// ---------------------------------------------------------------------------
// shared random instance machinery
// ---------------------------------------------------------------------------

struct Instance {
    members: Vec<(String, QuantileForecast)>,
    actuals: PointMatrix,
    levels: Vec<f64>,
}

fn random_levels(rng: &mut ChaCha12Rng, max_len: usize) -> Vec<f64> {
    let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let len = rng.random_range(1..=max_len);
    let mut picks: Vec<f64> = Vec::new();
    while picks.len() < len {
        let q = grid[rng.random_range(0..grid.len())];
        if !picks.contains(&q) {
            picks.push(q);
        }
    }
    picks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    picks
}

fn random_instance(rng: &mut ChaCha12Rng, max_members: usize) -> Instance {
    let n_items = rng.random_range(1..=3usize);
    let horizon = rng.random_range(1..=4usize);
    let levels = random_levels(rng, 3);
    let n_members = rng.random_range(1..=max_members);
    let members = (0..n_members)
        .map(|m| {
            let values: Vec<f64> = (0..n_items * horizon * levels.len())
                .map(|_| rng.random_range(-5.0..10.0))
                .collect();
            let raw = QuantileForecast::new(
                (0..n_items).map(|i| format!("i{i}")).collect(),
                horizon,
                levels.clone(),
                values,
            )
            .unwrap();
            (format!("m{m}"), enforce_monotone_quantiles(&raw))
        })
        .collect();
    let actual_rows: Vec<Vec<f64>> = (0..n_items)
        .map(|_| (0..horizon).map(|_| rng.random_range(0.5..10.0)).collect())
        .collect();
    Instance {
        members,
        actuals: PointMatrix::from_rows(&actual_rows).unwrap(),
        levels,
    }
}

/// Straight-from-definition WQL with its own pinball formulation; shares no
/// accumulation code with the library.
fn reference_wql(forecast: &QuantileForecast, actuals: &PointMatrix) -> f64 {
    let levels = forecast.quantile_levels();
    let mut loss_total = 0.0;
    let mut scale = 0.0;
    for item in 0..actuals.n_items() {
        for (step, &y) in actuals.row(item).iter().enumerate() {
            scale += y.abs();
            for (qi, &q) in levels.iter().enumerate() {
                let diff = y - forecast.value(item, step, qi);
                loss_total += if diff >= 0.0 {
                    q * diff
                } else {
                    (1.0 - q) * (-diff)
                };
            }
        }
    }
    2.0 * loss_total / (levels.len() as f64 * scale)
}

/// WQL of the candidate ensemble `(counts + e_chosen) / step`, recombined
/// from scratch member by member.
fn reference_candidate_wql(
    members: &[(String, QuantileForecast)],
    counts: &[u64],
    chosen: usize,
    step: u64,
    actuals: &PointMatrix,
    levels: &[f64],
) -> f64 {
    let first = &members[0].1;
    let cells = first.values().len();
    let mut combined = vec![0.0f64; cells];
    for (m, (_, forecast)) in members.iter().enumerate() {
        let count = counts[m] + u64::from(m == chosen);
        if count == 0 {
            continue;
        }
        for (acc, v) in combined.iter_mut().zip(forecast.values()) {
            *acc += count as f64 * v;
        }
    }
    for v in combined.iter_mut() {
        *v /= step as f64;
    }
    let candidate = QuantileForecast::new(
        first.item_ids().to_vec(),
        first.horizon(),
        levels.to_vec(),
        combined,
    )
    .unwrap();
    reference_wql(&candidate, actuals)
}

// ---------------------------------------------------------------------------
// 1. greedy selection matches a brute-force oracle
// ---------------------------------------------------------------------------

#[test]
fn c1_greedy_matches_brute_force_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    let start = std::time::Instant::now();
    for trial in 0..200 {
        let instance = random_instance(&mut rng, 4);
        let steps = rng.random_range(1..=5u64);
        let scorer = WindowScorer::wql(instance.actuals.clone(), instance.levels.clone());
        let weights = greedy_ensemble_selection(&instance.members, &scorer, steps).unwrap();

        // oracle: exhaustively score every candidate at every step
        let n_members = instance.members.len();
        let mut counts = vec![0u64; n_members];
        let mut oracle_trace = Vec::new();
        for j in 1..=steps {
            let mut best: Option<(usize, f64)> = None;
            for m in 0..n_members {
                let loss = reference_candidate_wql(
                    &instance.members,
                    &counts,
                    m,
                    j,
                    &instance.actuals,
                    &instance.levels,
                );
                if best.is_none_or(|(_, b)| loss < b) {
                    best = Some((m, loss));
                }
            }
            let (chosen, _) = best.unwrap();
            counts[chosen] += 1;
            oracle_trace.push(chosen);
        }

        assert_eq!(
            weights.trace(),
            oracle_trace.as_slice(),
            "trace diverged from the oracle on trial {trial}"
        );
        assert_eq!(weights.counts().unwrap(), counts.as_slice());
        for (m, &count) in counts.iter().enumerate() {
            assert_eq!(
                weights.weights()[m].to_bits(),
                (count as f64 / steps as f64).to_bits()
            );
        }
    }
    let elapsed = start.elapsed();
    report(
        "C1 greedy-oracle equivalence",
        elapsed.as_secs_f64() < 10.0,
        &format!("200 instances, exact trace/weight match, {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------------------
// 2. after one greedy step the ensemble loss is the best single-member loss
// ---------------------------------------------------------------------------

#[test]
fn c2_step_one_matches_model_selection_bitwise() {
    // same seed and draw sequence as C1, so these are the same instances
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    for _ in 0..200 {
        let instance = random_instance(&mut rng, 4);
        let _steps = rng.random_range(1..=5u64);
        let scorer = WindowScorer::wql(instance.actuals.clone(), instance.levels.clone());
        let selection = select_best(&instance.members, &scorer).unwrap();
        let weights = greedy_ensemble_selection(&instance.members, &scorer, 1).unwrap();
        let combined = combine_forecasts(&weights, &instance.members).unwrap();
        let ensemble_loss = wql(&combined, &instance.actuals).unwrap();
        assert_eq!(
            ensemble_loss.to_bits(),
            selection.chosen_loss().to_bits(),
            "step-1 ensemble loss differs from the selection winner"
        );
    }
    report(
        "C2 step-1 identity",
        true,
        "ensemble WQL after step 1 equals select_best's winning loss bitwise on 200 instances",
    );
}

// ---------------------------------------------------------------------------
// 3. metric implementations agree with straight-from-definition references
// ---------------------------------------------------------------------------

#[test]
fn c3_metric_oracles_and_pinball_convexity() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC3);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);

    for _ in 0..1000 {
        // WQL
        let instance = random_instance(&mut rng, 1);
        let forecast = &instance.members[0].1;
        let ours = wql(forecast, &instance.actuals).unwrap();
        let reference = reference_wql(forecast, &instance.actuals);
        assert!(close(ours, reference), "wql {ours} vs reference {reference}");

        // MASE on a fresh random instance
        let n_items = rng.random_range(1..=3usize);
        let horizon = rng.random_range(1..=4usize);
        let season_length = rng.random_range(1..=3usize);
        let train: Vec<TimeSeries> = (0..n_items)
            .map(|i| {
                let len = rng.random_range(season_length + 2..=season_length + 12);
                let mut values = vec![rng.random_range(-5.0..5.0)];
                for _ in 1..len {
                    let step: f64 = rng.random_range(-1.0..1.0);
                    values.push(values.last().unwrap() + step);
                }
                TimeSeries::new(
                    format!("i{i}"),
                    values,
                    "0",
                    Frequency::new(FrequencyLabel::Daily, season_length).unwrap(),
                    "t",
                )
                .unwrap()
            })
            .collect();
        let rand_matrix = |rng: &mut ChaCha12Rng| {
            PointMatrix::from_rows(
                &(0..n_items)
                    .map(|_| (0..horizon).map(|_| rng.random_range(-5.0..5.0)).collect())
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let point = rand_matrix(&mut rng);
        let actuals = rand_matrix(&mut rng);
        let ours = mase(&point, &actuals, &train, season_length).unwrap();
        // reference: explicit per-series loop with a separately built scaler
        let mut total = 0.0;
        for (item, train_series) in train.iter().enumerate() {
            let values = &train_series.values;
            let diffs: Vec<f64> = (season_length..values.len())
                .map(|t| (values[t] - values[t - season_length]).abs())
                .collect();
            let scaler = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let mae = actuals
                .row(item)
                .iter()
                .zip(point.row(item))
                .map(|(y, f)| (y - f).abs())
                .sum::<f64>()
                / horizon as f64;
            total += mae / scaler;
        }
        let reference = total / n_items as f64;
        assert!(close(ours, reference), "mase {ours} vs reference {reference}");
    }

    let mut convex_rng = ChaCha12Rng::seed_from_u64(0x1C3);
    for _ in 0..100_000 {
        let y = convex_rng.random_range(-100.0..100.0);
        let a = convex_rng.random_range(-100.0..100.0);
        let b = convex_rng.random_range(-100.0..100.0);
        let q = convex_rng.random_range(0.01..0.99);
        let lambda = convex_rng.random_range(0.0..1.0);
        let mixture = pinball_loss(y, lambda * a + (1.0 - lambda) * b, q);
        let bound = lambda * pinball_loss(y, a, q) + (1.0 - lambda) * pinball_loss(y, b, q);
        assert!(
            mixture <= bound + 1e-9,
            "convexity violated: {mixture} > {bound}"
        );
    }
    report(
        "C3 metric oracles",
        true,
        "wql/mase within 1e-9 of reference on 1000 instances; convexity on 1e5 triples",
    );
}

// ---------------------------------------------------------------------------
// 4. FLOPs model is exact
// ---------------------------------------------------------------------------

#[test]
fn c4_flops_exactness() {
    let expected = [
        ("tiny", 1_744_830_464u64),
        ("1m", 176_160_768),
        ("2m", 356_515_840),
        ("4m", 754_974_720),
    ];
    for (name, flops) in expected {
        let profile = ArchitectureProfile::named(name).unwrap();
        assert_eq!(flops_forward(&profile), flops, "profile {name}");
    }
    let profile = ArchitectureProfile::named("1m").unwrap();
    let forward = flops_forward(&profile) as f64;
    for n in 1u32..=64 {
        let report =
            strategy_flops(Strategy::ModelSelection, &profile, n, &StrategyInputs::default())
                .unwrap();
        assert_eq!(
            report.total_flops,
            (u64::from(n) + 1) as f64 * forward,
            "selection rule broke at N = {n}"
        );
        assert_eq!(report.amortized_flops, forward);
    }
    report(
        "C4 FLOPs exactness",
        true,
        "four profile constants exact; (N+1) selection rule exact for N in 1..=64",
    );
}

// ---------------------------------------------------------------------------
// 5. bias-variance identity and the bias-dominates direction
// ---------------------------------------------------------------------------

#[test]
fn c5_bias_variance_identity_and_direction() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC5);
    for _ in 0..500 {
        let m = rng.random_range(2..=8usize);
        let n_inputs = rng.random_range(1..=12usize);
        let truths: Vec<f64> = (0..n_inputs).map(|_| rng.random_range(-10.0..10.0)).collect();
        let forecasts: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n_inputs).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let report = estimate_bias_variance(&forecasts, &truths).unwrap();
        for (j, &(bias, variance)) in report.per_input.iter().enumerate() {
            let mse = forecasts
                .iter()
                .map(|f| (f[j] - truths[j]) * (f[j] - truths[j]))
                .sum::<f64>()
                / m as f64;
            assert!(
                (mse - bias - variance).abs() < 1e-9,
                "identity broke: mse {mse} bias {bias} variance {variance}"
            );
        }
    }

    // Deliberately underfit members on noiseless periodic signals: almost
    // all of the squared error should be bias, not realization variance.
    let config = SynthConfig::new(40, 96, 12, 0xC5C5);
    let synthetic = generate_synthetic_noiseless(&config).unwrap();
    let mut noise_rng = ChaCha12Rng::seed_from_u64(0x5C5C);
    let realizations = 8usize;
    let mut forecasts: Vec<Vec<f64>> = vec![Vec::new(); realizations];
    let mut truths = Vec::new();
    for synth in &synthetic {
        truths.extend_from_slice(&synth.true_continuation);
        for forecast in forecasts.iter_mut() {
            // each realization sees a slightly perturbed train set
            let jittered: Vec<f64> = synth
                .series
                .values
                .iter()
                .map(|v| v + noise_rng.random_range(-0.05..0.05))
                .collect();
            let train = TimeSeries::new(
                synth.series.id.clone(),
                jittered,
                "0",
                synth.series.frequency,
                "synthetic",
            )
            .unwrap();
            let tensor = ar_quantile(&train, 12, 2, &[0.5]).unwrap();
            let point = median_point(&tensor).unwrap();
            forecast.extend_from_slice(point.values());
        }
    }
    let decomposition = estimate_bias_variance(&forecasts, &truths).unwrap();
    let ratio = decomposition.aggregate_bias / decomposition.aggregate_variance;
    report(
        "C5 bias-variance",
        ratio > 1.0,
        &format!(
            "identity within 1e-9 on 500 instances; underfit members give bias/variance = {ratio:.1} (> 1)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. scaling-law recovery and significance under noise
// ---------------------------------------------------------------------------

/// Gamma function at integer or half-integer arguments, built from
/// Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
fn gamma_half(mut twice: u64) -> f64 {
    let mut value = if twice.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let base = if twice.is_multiple_of(2) { 2 } else { 1 };
    while twice > base {
        twice -= 2;
        value *= twice as f64 / 2.0;
    }
    value
}

/// Two-sided t-test p-value by Simpson integration of the density; an
/// independent route from the library's incomplete-beta evaluation.
fn reference_t_two_sided_p(t: f64, df: u64) -> f64 {
    let nu = df as f64;
    let norm = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    let pdf = |x: f64| norm * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let t = t.abs();
    let n = 20_000usize;
    let h = 2.0 * t / n as f64;
    let mut integral = pdf(-t) + pdf(t);
    for i in 1..n {
        let x = -t + i as f64 * h;
        integral += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    1.0 - integral * h / 3.0
}

/// Textbook OLS on raw sums (Cramer's rule), as an independent route.
fn reference_ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(scale, error) in points {
        let x = scale.ln();
        let y = error.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let sse: f64 = points
        .iter()
        .map(|&(scale, error)| {
            let r = error.ln() - intercept - slope * scale.ln();
            r * r
        })
        .sum();
    let df = points.len() as f64 - 2.0;
    let se = (sse / df / (sxx - sx * sx / n)).sqrt();
    let p = reference_t_two_sided_p(slope / se, points.len() as u64 - 2);
    (slope, intercept, p)
}

#[test]
fn c6_scaling_fit_recovery() {
    // exact planted power law
    let exact: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let scale = 2.0f64.powi(i);
            (scale, 3.0 * scale.powf(-0.5))
        })
        .collect();
    let fit = fit_scaling_law(&exact).unwrap();
    assert!(
        (fit.alpha + 0.5).abs() < 1e-8,
        "planted slope missed: {}",
        fit.alpha
    );

    // noisy planted slope: 5% multiplicative noise, 8 points, 200 trials
    let mut rng = ChaCha12Rng::seed_from_u64(0xC6);
    let mut significant = 0;
    let mut oracle_checked = 0;
    for trial in 0..200 {
        let points: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let scale = 2.0f64.powi(i);
                let u1: f64 = rng.random_range(1e-12..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                let gauss =
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                (scale, 3.0 * scale.powf(-0.5) * (0.05 * gauss).exp())
            })
            .collect();
        let fit = fit_scaling_law(&points).unwrap();
        if fit.p_value < 0.05 {
            significant += 1;
        }
        if trial < 20 {
            let (slope, intercept, p) = reference_ols(&points);
            assert!((fit.alpha - slope).abs() < 1e-9, "slope route mismatch");
            assert!((fit.intercept - intercept).abs() < 1e-9);
            assert!((fit.p_value - p).abs() < 1e-9, "p {} vs {}", fit.p_value, p);
            // six-point designs too (four degrees of freedom)
            let short_fit = fit_scaling_law(&points[..6]).unwrap();
            let (slope, intercept, p) = reference_ols(&points[..6]);
            assert!((short_fit.alpha - slope).abs() < 1e-9);
            assert!((short_fit.intercept - intercept).abs() < 1e-9);
            assert!((short_fit.p_value - p).abs() < 1e-9);
            oracle_checked += 1;
        }
    }
    report(
        "C6 scaling-fit recovery",
        significant >= 190,
        &format!(
            "exact slope within 1e-8; {significant}/200 noisy trials significant at 5%; \
             {oracle_checked} trials cross-checked against an independent OLS+t oracle"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. specialist portfolios beat a fixed member; naive averaging does not
// ---------------------------------------------------------------------------

fn write_seasonal_dataset(path: &std::path::Path, season: usize, seed: u64) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let length = 6 * season;
    let mut out = String::from("item_id,timestamp,target\n");
    for item in 0..2 {
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let amplitude: f64 = rng.random_range(4.0..6.0);
        for t in 0..length {
            let signal = 10.0
                + amplitude * (std::f64::consts::TAU * t as f64 / season as f64 + phase).sin()
                + rng.random_range(-0.3..0.3);
            out.push_str(&format!("i{item},{t},{signal}\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

fn seasonal_member(id: &str, season: usize, label: &str) -> PortfolioMember {
    PortfolioMember {
        id: id.into(),
        specialization: Specialization::Frequency {
            label: label.into(),
        },
        source: MemberSource::Builtin {
            model: BuiltinModel::SeasonalNaive {
                season_length: Some(season),
            },
        },
        architecture: None,
    }
}

fn specialist_fixture(dir: &std::path::Path) -> (BenchmarkManifest, Portfolio) {
    let seasons = [7usize, 12, 24];
    let mut datasets = Vec::new();
    for (i, &season) in seasons.iter().enumerate() {
        for copy in 0..2 {
            let id = format!("m{season}_{copy}");
            let file = dir.join(format!("{id}.csv"));
            write_seasonal_dataset(&file, season, 0x70 + (i * 2 + copy) as u64);
            datasets.push(DatasetEntry {
                id,
                path: file,
                frequency: "daily".into(),
                season_length: Some(season),
                horizon: season,
                domain: "synthetic".into(),
                n_windows: 1,
                stride: None,
                context_limit: None,
            });
        }
    }
    let manifest = BenchmarkManifest {
        name: Some("seasonal-mix".into()),
        datasets,
        baseline: "m7".into(),
    };
    let portfolio = Portfolio::new(
        "specialists",
        vec![
            seasonal_member("m7", 7, "weekly-cycle"),
            seasonal_member("m12", 12, "yearly-cycle"),
            seasonal_member("m24", 24, "daily-cycle"),
        ],
    )
    .unwrap();
    (manifest, portfolio)
}

#[test]
fn c7_specialist_portfolio_beats_fixed_member() {
    let start = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (manifest, portfolio) = specialist_fixture(dir.path());

    let best_config = RunConfig {
        combiner: Combiner::Best,
        ..Default::default()
    };
    let best = evaluate(&manifest, &portfolio, &best_config).unwrap();
    assert!(best.is_clean(), "failed datasets: {:?}", best.failed);
    let best_aggregate = best.aggregate_for("portfolio(best)").unwrap();

    let average_config = RunConfig {
        combiner: Combiner::SimpleAverage,
        ..Default::default()
    };
    let average = evaluate(&manifest, &portfolio, &average_config).unwrap();
    let average_aggregate = average
        .aggregate_for("portfolio(simple_average)")
        .unwrap();

    let elapsed = start.elapsed();
    report(
        "C7 portfolio-beats-fixed-member direction",
        best_aggregate < 0.95 && average_aggregate > best_aggregate && elapsed.as_secs() < 30,
        &format!(
            "best {best_aggregate:.3} < 0.95; simple average {average_aggregate:.3} worse than best; {elapsed:.2?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. identical runs are byte-identical at any parallelism level
// ---------------------------------------------------------------------------

#[test]
fn c8_output_is_deterministic_across_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, portfolio) = specialist_fixture(dir.path());
    let render = |parallelism: usize| {
        let config = RunConfig {
            combiner: Combiner::Greedy { steps: 50 },
            seed: 7,
            parallelism,
            ..Default::default()
        };
        evaluate(&manifest, &portfolio, &config).unwrap().table.to_csv()
    };
    let serial = render(1);
    let wide = render(4);
    let wider = render(8);
    report(
        "C8 determinism",
        serial == wide && wide == wider,
        "byte-identical leaderboards at parallelism 1, 4, and 8",
    );
}

// ---------------------------------------------------------------------------
// 9. forecast exchange CSV round-trips bit-exactly
// ---------------------------------------------------------------------------

#[test]
fn c9_exchange_round_trip_is_bit_exact() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC9);
    for trial in 0..100 {
        let n_items = rng.random_range(1..=4usize);
        let horizon = rng.random_range(1..=5usize);
        let levels = random_levels(&mut rng, 4);
        let values: Vec<f64> = (0..n_items * horizon * levels.len())
            .map(|_| {
                // mix magnitudes so shortest-round-trip printing is stressed
                let mantissa: f64 = rng.random_range(-1.0..1.0);
                let exponent: i32 = rng.random_range(-9..9);
                mantissa * 10f64.powi(exponent)
            })
            .collect();
        let forecast = QuantileForecast::new(
            (0..n_items).map(|i| format!("item-{i}")).collect(),
            horizon,
            levels,
            values,
        )
        .unwrap();

        let mut first_bytes = Vec::new();
        write_external_forecasts(&mut first_bytes, [("task", trial as u32, &forecast)]).unwrap();
        let first = ingest_external_forecasts(first_bytes.as_slice()).unwrap();
        let mut second_bytes = Vec::new();
        write_external_forecasts(
            &mut second_bytes,
            first.iter().map(|((t, w), f)| (t.as_str(), *w, f)),
        )
        .unwrap();
        let second = ingest_external_forecasts(second_bytes.as_slice()).unwrap();

        let f1 = first.get("task", trial as u32).unwrap();
        let f2 = second.get("task", trial as u32).unwrap();
        assert_eq!(f1.item_ids(), f2.item_ids());
        assert_eq!(f1.quantile_levels(), f2.quantile_levels());
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert_eq!(a.to_bits(), b.to_bits(), "value drifted on trial {trial}");
        }
    }
    report(
        "C9 exchange round-trip",
        true,
        "ingest -> serialize -> ingest bit-exact on 100 random tensors",
    );
}

// ---------------------------------------------------------------------------
// supporting check: the implicit matched-season baseline self-ratio
// ---------------------------------------------------------------------------

#[test]
fn self_baseline_aggregate_is_exactly_one() {
    let dir = tempfile::tempdir().unwrap();
    write_seasonal_dataset(&dir.path().join("d.csv"), 7, 42);
    let manifest = BenchmarkManifest {
        name: None,
        datasets: vec![DatasetEntry {
            id: "d".into(),
            path: dir.path().join("d.csv"),
            frequency: "daily".into(),
            season_length: Some(7),
            horizon: 7,
            domain: "synthetic".into(),
            n_windows: 1,
            stride: None,
            context_limit: None,
        }],
        baseline: "seasonal_naive".into(),
    };
    let portfolio = Portfolio::new(
        "solo",
        vec![PortfolioMember {
            id: "seasonal_naive".into(),
            specialization: Specialization::Generalist,
            source: MemberSource::Builtin {
                model: BuiltinModel::SeasonalNaive { season_length: None },
            },
            architecture: None,
        }],
    )
    .unwrap();
    let config = RunConfig {
        combiner: Combiner::Best,
        metric: MetricKind::Wql,
        ..Default::default()
    };
    let outcome = evaluate(&manifest, &portfolio, &config).unwrap();
    assert_eq!(outcome.aggregate_for("seasonal_naive"), Some(1.0));
    assert_eq!(outcome.aggregate_for("portfolio(best)"), Some(1.0));

    // sanity on the implicit baseline path too
    let naive = SeasonalNaive { season_length: None };
    let task = polycast::series::ForecastTask::new(7, 7).unwrap();
    let series = polycast::harness::load_series_csv(
        &dir.path().join("d.csv"),
        Frequency::new(FrequencyLabel::Daily, 7).unwrap(),
        "synthetic",
        polycast::harness::MissingPolicy::Reject,
    )
    .unwrap();
    assert!(naive.forecast(&series, &task).is_ok());
}
