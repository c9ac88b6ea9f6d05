//! Credit assignment: aggregate per-task ensemble weights into a
//! (task group x member) matrix and see specialists light up on their own
//! groups.
//!
//! ```bash
//! cargo run --example weights_heatmap
//! ```

use polycast::analysis::{weight_assignment_matrix, WeightGrouping, WeightRun};
use polycast::combine::EnsembleWeights;

fn run(task: &str, group: &str, counts: [u64; 3]) -> WeightRun {
    let member_ids = vec!["hourly".to_string(), "daily".to_string(), "generalist".to_string()];
    let steps: u64 = counts.iter().sum();
    WeightRun {
        task_id: task.to_string(),
        group_tag: group.to_string(),
        weights: EnsembleWeights::from_counts(member_ids, counts.to_vec(), steps, Vec::new())
            .unwrap(),
    }
}

fn main() {
    // hourly tasks lean on the hourly specialist, daily tasks on the daily
    // one, and the generalist picks up the slack everywhere
    let runs = vec![
        run("traffic-1", "hourly", [8, 0, 2]),
        run("traffic-2", "hourly", [7, 1, 2]),
        run("grid-load", "hourly", [9, 0, 1]),
        run("sales-1", "daily", [0, 9, 1]),
        run("sales-2", "daily", [1, 6, 3]),
        run("visits", "weekly", [2, 3, 5]),
    ];

    let matrix = weight_assignment_matrix(&runs, WeightGrouping::ByTaskGroup).unwrap();
    print!("{:<10}", "group");
    for member in &matrix.col_labels {
        print!(" {member:>12}");
    }
    println!();
    for (row, group) in matrix.row_labels.iter().enumerate() {
        print!("{group:<10}");
        for value in matrix.row(row) {
            print!(" {value:>12.3}");
        }
        println!();
    }
    println!("\nrows are normalized to sum to 1 across members.");
}
