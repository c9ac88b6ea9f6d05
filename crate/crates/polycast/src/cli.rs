//! Command-line surface: one thin binary exposing the library pipelines as
//! subcommands. Every subcommand emits a CSV table (markdown with
//! `--markdown`), to stdout or `--out`. Exit code 0 means a fully clean
//! run; per-dataset failures in `evaluate` exit 1, hard errors exit 2.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    estimate_bias_variance, fit_scaling_law, generate_synthetic_noiseless,
    weight_assignment_matrix, SynthConfig, WeightGrouping, WeightRun,
};
use crate::combine::EnsembleWeights;
use crate::compute::{
    flops_forward, strategy_flops, ArchitectureProfile, FineTuneExtras, Strategy, StrategyInputs,
};
use crate::harness::tables::{fmt_float, Table};
use crate::harness::{
    evaluate, load_manifest, Combiner, GroupBy, HarnessError, MissingPolicy, RunConfig,
};
use crate::metrics::MetricKind;
use crate::portfolio::{MemberSource, Portfolio, PortfolioMember};

/// Environment variable supplying the default worker count for `evaluate`.
pub const PARALLELISM_ENV: &str = "POLYCAST_PARALLELISM";

#[derive(Parser)]
#[command(
    name = "polycast",
    version,
    about = "Build, combine, and evaluate portfolios of probabilistic forecasters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a portfolio against a benchmark manifest
    Evaluate(EvaluateArgs),
    /// Test-time FLOPs accounting for a strategy over a model portfolio
    Flops(FlopsArgs),
    /// Bias-variance decomposition across model-realization forecast files
    BiasVariance(BiasVarianceArgs),
    /// Generate a synthetic noiseless benchmark directory
    Synth(SynthArgs),
    /// Fit a log-log scaling law to a (scale, error) points file
    ScalingFit(ScalingFitArgs),
    /// Aggregate saved weight runs into a credit-assignment matrix
    WeightsHeatmap(WeightsHeatmapArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Render the table as markdown instead of CSV
    #[arg(long)]
    markdown: bool,
    /// Write the table to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Benchmark manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    /// Portfolio spec (JSON)
    #[arg(long)]
    portfolio: PathBuf,
    /// Combiner: best, greedy, simple, or perf_weighted
    #[arg(long, default_value = "greedy")]
    combiner: String,
    /// Greedy selection steps
    #[arg(long, default_value_t = 100)]
    steps: u64,
    /// Keep the greedy weights from the lowest-loss step, not the final step
    #[arg(long)]
    greedy_best_iteration: bool,
    /// Metric: wql or mase
    #[arg(long, default_value = "wql")]
    metric: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset-level worker threads (default: POLYCAST_PARALLELISM or auto)
    #[arg(long)]
    parallelism: Option<usize>,
    /// Forward-fill missing values instead of rejecting the dataset
    #[arg(long)]
    fill_missing: bool,
    /// Tag saved weight runs by `frequency` or `domain`
    #[arg(long, default_value = "frequency")]
    group_by: String,
    /// Directory to write per-dataset weight runs (JSON) into
    #[arg(long)]
    save_weights: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FlopsArgs {
    /// Named profile: tiny, 4m, 2m, or 1m
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    encoder_layers: Option<u64>,
    #[arg(long)]
    decoder_layers: Option<u64>,
    #[arg(long)]
    model_dim: Option<u64>,
    /// Effective sequence length in encoder tokens
    #[arg(long, default_value_t = crate::compute::DEFAULT_SEQ_LEN)]
    seq_len: u64,
    /// Strategy: zero_shot, model_selection, greedy_ensemble, or fine_tune
    #[arg(long)]
    strategy: String,
    /// Portfolio size N
    #[arg(long, default_value_t = 1)]
    members: u32,
    /// Distinct members an actual ensembling run selected
    #[arg(long)]
    selected: Option<u32>,
    #[arg(long)]
    gradient_steps: Option<u64>,
    #[arg(long)]
    batch_size: Option<u64>,
    #[arg(long)]
    test_series: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BiasVarianceArgs {
    /// Truths file (CSV `input_id,value`)
    #[arg(long)]
    truths: PathBuf,
    /// One forecast file per model realization (CSV `input_id,value`)
    #[arg(long, required = true, num_args = 1..)]
    forecasts: Vec<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    series: usize,
    #[arg(long, default_value_t = 256)]
    length: usize,
    #[arg(long, default_value_t = 24)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sinusoid components per series
    #[arg(long, default_value_t = 3)]
    components: usize,
    /// Output directory for data.csv, truths.csv, and manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScalingFitArgs {
    /// Points file (CSV `scale,error`)
    #[arg(long)]
    points: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WeightsHeatmapArgs {
    /// Directory of weight-run JSON files
    #[arg(long)]
    runs: PathBuf,
    /// Row grouping label: task_group or specialization
    #[arg(long, default_value = "task_group")]
    grouping: String,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses arguments from the process environment and runs; returns the exit
/// code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Runs with explicit arguments (first entry is the binary name).
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<i32, HarnessError> {
    match command {
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Flops(args) => cmd_flops(args),
        Command::BiasVariance(args) => cmd_bias_variance(args),
        Command::Synth(args) => cmd_synth(args),
        Command::ScalingFit(args) => cmd_scaling_fit(args),
        Command::WeightsHeatmap(args) => cmd_weights_heatmap(args),
    }
}

fn config_err(reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        reason: reason.into(),
    }
}

fn emit(table: &Table, output: &OutputArgs) -> Result<(), HarnessError> {
    let rendered = table.render(output.markdown);
    match &output.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

// --- evaluate ---------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct PortfolioSpecFile {
    name: String,
    members: Vec<PortfolioMember>,
}

/// Loads a portfolio spec, resolving external forecast paths relative to
/// the spec file.
pub fn load_portfolio(path: &Path) -> Result<Portfolio, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(format!("cannot read portfolio `{}`: {e}", path.display()))
    })?;
    let spec: PortfolioSpecFile = serde_json::from_str(&text)?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let members = spec
        .members
        .into_iter()
        .map(|mut member| {
            if let MemberSource::External { path } = &mut member.source {
                if path.is_relative() {
                    *path = base_dir.join(&path);
                }
            }
            member
        })
        .collect();
    Ok(Portfolio::new(spec.name, members)?)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32, HarnessError> {
    let manifest = load_manifest(&args.manifest)?;
    let portfolio = load_portfolio(&args.portfolio)?;
    let combiner = Combiner::parse(&args.combiner, args.steps)
        .ok_or_else(|| config_err(format!("unknown combiner `{}`", args.combiner)))?;
    let metric = MetricKind::parse(&args.metric)
        .ok_or_else(|| config_err(format!("unknown metric `{}`", args.metric)))?;
    let parallelism = match args.parallelism {
        Some(p) => p,
        None => std::env::var(PARALLELISM_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0),
    };
    let group_by = match args.group_by.to_ascii_lowercase().as_str() {
        "frequency" => GroupBy::Frequency,
        "domain" => GroupBy::Domain,
        other => return Err(config_err(format!("unknown group-by `{other}`"))),
    };
    let config = RunConfig {
        combiner,
        metric,
        seed: args.seed,
        parallelism,
        missing: if args.fill_missing {
            MissingPolicy::ForwardFill
        } else {
            MissingPolicy::Reject
        },
        group_by,
        greedy_best_iteration: args.greedy_best_iteration,
    };
    let outcome = evaluate(&manifest, &portfolio, &config)?;
    if let Some(dir) = &args.save_weights {
        save_weight_runs(dir, &outcome.weight_runs())?;
    }
    emit(&outcome.table, &args.output)?;
    Ok(if outcome.is_clean() { 0 } else { 1 })
}

// --- weight-run files -------------------------------------------------------

#[derive(Serialize)]
struct RunRecordOut<'a> {
    task_id: &'a str,
    group_tag: &'a str,
    member_ids: &'a [String],
    weights: &'a [f64],
    counts: Option<&'a [u64]>,
    trace: &'a [usize],
    steps: u64,
}

#[derive(Deserialize)]
struct RunRecordIn {
    task_id: String,
    group_tag: String,
    member_ids: Vec<String>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    counts: Option<Vec<u64>>,
    #[serde(default)]
    trace: Vec<usize>,
    #[serde(default)]
    steps: Option<u64>,
}

/// Writes one JSON file per run into `dir`.
pub fn save_weight_runs(dir: &Path, runs: &[&WeightRun]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    for run in runs {
        let record = RunRecordOut {
            task_id: &run.task_id,
            group_tag: &run.group_tag,
            member_ids: run.weights.member_ids(),
            weights: run.weights.weights(),
            counts: run.weights.counts(),
            trace: run.weights.trace(),
            steps: run.weights.steps(),
        };
        let file_name = format!("{}.json", run.task_id.replace(['/', '\\'], "_"));
        std::fs::write(
            dir.join(file_name),
            serde_json::to_string_pretty(&record)?,
        )?;
    }
    Ok(())
}

/// Reads every `.json` run in `dir`, sorted by file name.
pub fn load_weight_runs(dir: &Path) -> Result<Vec<WeightRun>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut runs = Vec::with_capacity(paths.len());
    for path in paths {
        let record: RunRecordIn = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        let weights = match (record.counts, record.steps) {
            (Some(counts), Some(steps)) => {
                EnsembleWeights::from_counts(record.member_ids, counts, steps, record.trace)?
            }
            _ => {
                let weights = record.weights.ok_or_else(|| {
                    config_err(format!(
                        "`{}` carries neither counts nor weights",
                        path.display()
                    ))
                })?;
                EnsembleWeights::from_weights(record.member_ids, weights)?
            }
        };
        runs.push(WeightRun {
            task_id: record.task_id,
            group_tag: record.group_tag,
            weights,
        });
    }
    Ok(runs)
}

// --- flops ------------------------------------------------------------------

fn cmd_flops(args: FlopsArgs) -> Result<i32, HarnessError> {
    let (profile, profile_label) = match &args.profile {
        Some(name) => (
            ArchitectureProfile::named(name)
                .ok_or_else(|| config_err(format!("unknown profile `{name}`")))?,
            name.clone(),
        ),
        None => {
            let (le, ld, d) = match (args.encoder_layers, args.decoder_layers, args.model_dim) {
                (Some(le), Some(ld), Some(d)) => (le, ld, d),
                _ => {
                    return Err(config_err(
                        "pass --profile or all of --encoder-layers, --decoder-layers, --model-dim",
                    ))
                }
            };
            (
                ArchitectureProfile::new(le, ld, d, args.seq_len)?,
                format!("custom(le={le},ld={ld},d={d},t={})", args.seq_len),
            )
        }
    };
    let strategy = Strategy::parse(&args.strategy)
        .ok_or_else(|| config_err(format!("unknown strategy `{}`", args.strategy)))?;
    let fine_tune = match (args.gradient_steps, args.batch_size, args.test_series) {
        (Some(gradient_steps), Some(batch_size), Some(test_series)) => Some(FineTuneExtras {
            gradient_steps,
            batch_size,
            test_series,
        }),
        (None, None, None) => None,
        _ => {
            return Err(config_err(
                "fine-tune accounting needs --gradient-steps, --batch-size, and --test-series",
            ))
        }
    };
    let inputs = StrategyInputs {
        ensemble_selected: args.selected,
        fine_tune,
    };
    let report = strategy_flops(strategy, &profile, args.members, &inputs)?;

    let mut table = Table::new(
        ["strategy", "profile", "n_members", "component", "flops"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let mut push = |component: &str, flops: f64| {
        table.push_row(vec![
            report.strategy.as_str().to_string(),
            profile_label.clone(),
            report.n_members.to_string(),
            component.to_string(),
            fmt_float(flops),
        ]);
    };
    push("forward_pass", flops_forward(&profile) as f64);
    for (component, flops) in &report.detail {
        push(component, *flops);
    }
    push("total", report.total_flops);
    push("amortized", report.amortized_flops);
    emit(&table, &args.output)?;
    Ok(0)
}

// --- bias-variance ----------------------------------------------------------

fn read_keyed_values(path: &Path) -> Result<Vec<(String, f64)>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(config_err(format!(
                "`{}`: expected `input_id,value` rows",
                path.display()
            )));
        }
        let value: f64 = record[1].parse().map_err(|_| {
            config_err(format!("`{}`: bad value `{}`", path.display(), &record[1]))
        })?;
        out.push((record[0].to_string(), value));
    }
    if out.is_empty() {
        return Err(config_err(format!("`{}` contains no rows", path.display())));
    }
    Ok(out)
}

fn cmd_bias_variance(args: BiasVarianceArgs) -> Result<i32, HarnessError> {
    let truths = read_keyed_values(&args.truths)?;
    let mut realizations = Vec::with_capacity(args.forecasts.len());
    for path in &args.forecasts {
        let rows = read_keyed_values(path)?;
        let lookup: std::collections::HashMap<&str, f64> =
            rows.iter().map(|(id, v)| (id.as_str(), *v)).collect();
        let aligned: Vec<f64> = truths
            .iter()
            .map(|(id, _)| {
                lookup.get(id.as_str()).copied().ok_or_else(|| {
                    config_err(format!(
                        "`{}` is missing forecast for input `{id}`",
                        path.display()
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        realizations.push(aligned);
    }
    let truth_values: Vec<f64> = truths.iter().map(|(_, v)| *v).collect();
    let report = estimate_bias_variance(&realizations, &truth_values)?;

    let mut table = Table::new(
        ["input_id", "bias", "variance"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for ((id, _), (bias, variance)) in truths.iter().zip(&report.per_input) {
        table.push_row(vec![id.clone(), fmt_float(*bias), fmt_float(*variance)]);
    }
    table.push_row(vec![
        format!("(mean over {} realizations)", report.realizations),
        fmt_float(report.aggregate_bias),
        fmt_float(report.aggregate_variance),
    ]);
    emit(&table, &args.output)?;
    Ok(0)
}

// --- synth ------------------------------------------------------------------

fn cmd_synth(args: SynthArgs) -> Result<i32, HarnessError> {
    let mut config = SynthConfig::new(args.series, args.length, args.horizon, args.seed);
    config.components = args.components;
    let generated = generate_synthetic_noiseless(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut data = String::from("item_id,timestamp,target\n");
    let mut truths = String::from("item_id,step,value\n");
    for synth in &generated {
        for (t, v) in synth.series.values.iter().enumerate() {
            data.push_str(&format!("{},{t},{}\n", synth.series.id, fmt_float(*v)));
        }
        for (step, v) in synth.true_continuation.iter().enumerate() {
            truths.push_str(&format!(
                "{},{},{}\n",
                synth.series.id,
                step + 1,
                fmt_float(*v)
            ));
        }
    }
    std::fs::write(args.out_dir.join("data.csv"), data)?;
    std::fs::write(args.out_dir.join("truths.csv"), truths)?;
    let manifest = serde_json::json!({
        "name": "synthetic",
        "datasets": [{
            "id": "synthetic",
            "path": "data.csv",
            "frequency": "daily",
            "season_length": 1,
            "horizon": args.horizon,
            "domain": "synthetic"
        }]
    });
    std::fs::write(
        args.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut table = Table::new(
        ["n_series", "length", "horizon", "seed", "out_dir"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    table.push_row(vec![
        args.series.to_string(),
        args.length.to_string(),
        args.horizon.to_string(),
        args.seed.to_string(),
        args.out_dir.display().to_string(),
    ]);
    emit(&table, &args.output)?;
    Ok(0)
}

// --- scaling-fit ------------------------------------------------------------

fn cmd_scaling_fit(args: ScalingFitArgs) -> Result<i32, HarnessError> {
    let rows = read_keyed_values(&args.points)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|(scale, error)| {
            let scale: f64 = scale.parse().map_err(|_| {
                config_err(format!("bad scale `{scale}` in `{}`", args.points.display()))
            })?;
            Ok((scale, *error))
        })
        .collect::<Result<_, HarnessError>>()?;
    let fit = fit_scaling_law(&points)?;
    let mut table = Table::new(
        ["alpha", "intercept", "p_value", "r_squared", "n_points"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    table.push_row(vec![
        fmt_float(fit.alpha),
        fmt_float(fit.intercept),
        fmt_float(fit.p_value),
        fmt_float(fit.r_squared),
        fit.n_points.to_string(),
    ]);
    emit(&table, &args.output)?;
    Ok(0)
}

// --- weights-heatmap --------------------------------------------------------

fn cmd_weights_heatmap(args: WeightsHeatmapArgs) -> Result<i32, HarnessError> {
    let grouping = match args.grouping.to_ascii_lowercase().replace('-', "_").as_str() {
        "task_group" => WeightGrouping::ByTaskGroup,
        "specialization" => WeightGrouping::BySpecialization,
        other => return Err(config_err(format!("unknown grouping `{other}`"))),
    };
    let runs = load_weight_runs(&args.runs)?;
    let matrix = weight_assignment_matrix(&runs, grouping)?;
    let mut columns = vec![grouping.row_axis().to_string()];
    columns.extend(matrix.col_labels.iter().cloned());
    let mut table = Table::new(columns);
    for (row_idx, label) in matrix.row_labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(matrix.row(row_idx).iter().map(|v| fmt_float(*v)));
        table.push_row(row);
    }
    emit(&table, &args.output)?;
    Ok(0)
}
