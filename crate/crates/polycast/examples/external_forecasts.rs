//! Exchange forecasts with external models through the CSV wire format:
//! write a file, ingest it (crossing quantiles are corrected and counted),
//! align it with a task, and average it with a builtin member.
//!
//! ```bash
//! cargo run --example external_forecasts
//! ```

use polycast::combine::{combine_forecasts, simple_average_weights};
use polycast::portfolio::{ingest_external_forecasts, write_external_forecasts};
use polycast::series::QuantileForecast;

fn main() {
    let levels = vec![0.1, 0.5, 0.9];
    // one quantile vector crosses on purpose
    let external = QuantileForecast::new(
        vec!["store-1".into(), "store-2".into()],
        2,
        levels.clone(),
        vec![
            9.0, 10.0, 11.5, // store-1 step 1
            9.5, 10.5, 12.0, // store-1 step 2
            21.0, 20.0, 24.0, // store-2 step 1: 21 > 20 crosses
            20.0, 22.0, 25.0, // store-2 step 2
        ],
    )
    .unwrap();

    let mut wire = Vec::new();
    write_external_forecasts(&mut wire, [("retail", 0u32, &external)]).unwrap();
    println!("--- exchange file ---");
    print!("{}", String::from_utf8_lossy(&wire));

    let ingested = ingest_external_forecasts(wire.as_slice()).unwrap();
    println!(
        "\ningested {} forecast group(s); corrected {} crossing quantile vector(s)",
        ingested.len(),
        ingested.corrected_crossings
    );
    let aligned = ingested
        .aligned("retail", 0, &["store-1".into(), "store-2".into()], &levels)
        .unwrap();
    println!(
        "store-2 step 1 after isotonic correction: {:?}",
        aligned.level_slice(1, 0)
    );

    // blend fifty-fifty with a builtin-style flat forecast
    let builtin = QuantileForecast::new(
        vec!["store-1".into(), "store-2".into()],
        2,
        levels,
        vec![10.0; 12],
    )
    .unwrap();
    let members = vec![
        ("external".to_string(), aligned),
        ("builtin".to_string(), builtin),
    ];
    let weights =
        simple_average_weights(&["external".to_string(), "builtin".to_string()]).unwrap();
    let blended = combine_forecasts(&weights, &members).unwrap();
    println!(
        "blended store-1 step 1 quantiles: {:?} (still monotone: {})",
        blended.level_slice(0, 0),
        blended.is_monotone()
    );
}
