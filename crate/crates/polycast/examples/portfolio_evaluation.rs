//! End-to-end benchmark run: synthesize datasets with different season
//! lengths, evaluate a portfolio of seasonal specialists against a single
//! fixed-season member, and print the leaderboard.
//!
//! Validation-based selection routes each dataset to its matched specialist,
//! while naive averaging mixes mismatched members and scores worse.
//!
//! ```bash
//! cargo run --example portfolio_evaluation
//! ```

use polycast::harness::{evaluate, BenchmarkManifest, Combiner, DatasetEntry, RunConfig};
use polycast::portfolio::{BuiltinModel, MemberSource, Portfolio, PortfolioMember, Specialization};

fn seasonal_csv(season: usize, phase: f64) -> String {
    let mut out = String::from("item_id,timestamp,target\n");
    for item in 0..3 {
        for t in 0..6 * season {
            let wave = (std::f64::consts::TAU * t as f64 / season as f64 + phase).sin();
            let value = 20.0 + 6.0 * wave + 0.3 * ((t * (item + 3)) % 5) as f64;
            out.push_str(&format!("i{item},{t},{value}\n"));
        }
    }
    out
}

fn specialist(id: &str, season: usize) -> PortfolioMember {
    PortfolioMember {
        id: id.into(),
        specialization: Specialization::Frequency {
            label: format!("period-{season}"),
        },
        source: MemberSource::Builtin {
            model: BuiltinModel::SeasonalNaive {
                season_length: Some(season),
            },
        },
        architecture: None,
    }
}

fn main() {
    let dir = std::env::temp_dir().join("polycast-portfolio-example");
    std::fs::create_dir_all(&dir).unwrap();

    let mut datasets = Vec::new();
    for (i, season) in [7usize, 12, 24].into_iter().enumerate() {
        let id = format!("period{season}");
        let path = dir.join(format!("{id}.csv"));
        std::fs::write(&path, seasonal_csv(season, 0.4 * i as f64)).unwrap();
        datasets.push(DatasetEntry {
            id,
            path,
            frequency: "daily".into(),
            season_length: Some(season),
            horizon: season,
            domain: "synthetic".into(),
            n_windows: 1,
            stride: None,
            context_limit: None,
        });
    }
    let manifest = BenchmarkManifest {
        name: Some("seasonal-mix".into()),
        datasets,
        baseline: "m7".into(),
    };
    let portfolio = Portfolio::new(
        "specialists",
        vec![specialist("m7", 7), specialist("m12", 12), specialist("m24", 24)],
    )
    .unwrap();

    for combiner in [Combiner::Best, Combiner::SimpleAverage] {
        let config = RunConfig {
            combiner,
            ..Default::default()
        };
        let outcome = evaluate(&manifest, &portfolio, &config).unwrap();
        println!("=== combiner: {} ===", combiner.label());
        print!("{}", outcome.table.to_csv());
        println!();
    }
    println!("relative errors are against the fixed season-7 member `m7`.");
}
