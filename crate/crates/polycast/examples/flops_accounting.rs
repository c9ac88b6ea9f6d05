//! Test-time FLOPs for each adaptation strategy across the built-in
//! architecture profiles.
//!
//! ```bash
//! cargo run --example flops_accounting
//! ```

use polycast::compute::{
    flops_forward, strategy_flops, ArchitectureProfile, FineTuneExtras, Strategy, StrategyInputs,
};

fn main() {
    println!("{:<8} {:>16} {:>16}", "profile", "forward", "train_step");
    for (name, profile) in ArchitectureProfile::NAMED {
        println!(
            "{name:<8} {:>16} {:>16}",
            flops_forward(&profile),
            polycast::compute::flops_train_step(&profile)
        );
    }

    // six-member portfolio, one of everything
    let profile = ArchitectureProfile::named("tiny").unwrap();
    let members = 6;
    let cases = [
        (Strategy::ZeroShot, StrategyInputs::default()),
        (Strategy::ModelSelection, StrategyInputs::default()),
        (
            Strategy::GreedyEnsemble,
            StrategyInputs {
                ensemble_selected: Some(2),
                ..Default::default()
            },
        ),
        (
            Strategy::FineTune,
            StrategyInputs {
                fine_tune: Some(FineTuneExtras {
                    gradient_steps: 1000,
                    batch_size: 256,
                    test_series: 5000,
                }),
                ..Default::default()
            },
        ),
    ];
    println!(
        "\n{:<18} {:>16} {:>16}",
        "strategy (N=6)", "total", "amortized"
    );
    for (strategy, inputs) in cases {
        let report = strategy_flops(strategy, &profile, members, &inputs).unwrap();
        println!(
            "{:<18} {:>16.0} {:>16.0}",
            report.strategy.as_str(),
            report.total_flops,
            report.amortized_flops
        );
    }
    println!("\namortized numbers drop the one-time selection / tuning cost.");
}
