//! The end-to-end evaluation pipeline: fit the configured combiner on each
//! dataset's validation window, score every member and the combined
//! strategy on the test windows, and assemble a leaderboard of relative
//! errors with a final geometric-mean row.
//!
//! Holdout datasets (`n_windows == 1`) split off the last `2 * horizon`
//! observations: the first half is the validation window the combiner is
//! fitted on, the second half is the scored test window. Rolling datasets
//! fit the combiner on the first window alone and score the fixed
//! combination across all windows. External members supply forecasts per
//! window id: 0 is always the selection window; holdout tasks use 1 for the
//! test window, rolling tasks index windows chronologically from 0.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::analysis::WeightRun;
use crate::combine::{
    combine_forecasts, greedy_ensemble_selection_opts, performance_weighted, select_best,
    simple_average_weights, EnsembleWeights,
};
use crate::harness::manifest::{BenchmarkManifest, DatasetEntry, MissingPolicy};
use crate::harness::tables::{fmt_float, Table};
use crate::harness::{load_series_csv, HarnessError};
use crate::metrics::{
    geometric_mean_aggregate, mase, median_point, relative_error, wql, DatasetScore, MetricKind,
    WindowScorer,
};
use crate::portfolio::{read_external_forecasts, ExternalForecasts, MemberSource, Portfolio};
use crate::series::{
    rolling_windows, split_holdout, ForecastTask, PointMatrix, QuantileForecast, TimeSeries,
};

/// How validation losses turn into the deployed combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    /// Use the single member with the lowest validation loss.
    Best,
    /// Greedy ensemble selection with the given number of steps.
    Greedy { steps: u64 },
    SimpleAverage,
    PerformanceWeighted,
}

impl Combiner {
    pub fn label(&self) -> String {
        match self {
            Combiner::Best => "best".into(),
            Combiner::Greedy { steps } => format!("greedy({steps})"),
            Combiner::SimpleAverage => "simple_average".into(),
            Combiner::PerformanceWeighted => "performance_weighted".into(),
        }
    }

    /// Parses a combiner name; `steps` only applies to `greedy`.
    pub fn parse(name: &str, steps: u64) -> Option<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "best" => Some(Combiner::Best),
            "greedy" => Some(Combiner::Greedy { steps }),
            "simple" | "simple_average" => Some(Combiner::SimpleAverage),
            "perf_weighted" | "performance_weighted" => Some(Combiner::PerformanceWeighted),
            _ => None,
        }
    }
}

/// Which dataset tag labels saved weight runs for credit assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    Domain,
    #[default]
    Frequency,
}

/// Run configuration. Identical configuration and seed produce
/// byte-identical tables at any parallelism level.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub combiner: Combiner,
    pub metric: MetricKind,
    /// Recorded for reproducibility; the builtin members are deterministic.
    pub seed: u64,
    /// Worker threads for dataset-level parallelism; 0 picks the default.
    pub parallelism: usize,
    pub missing: MissingPolicy,
    pub group_by: GroupBy,
    /// Return the greedy weights from the lowest-loss step instead of the
    /// final step.
    pub greedy_best_iteration: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            combiner: Combiner::Greedy { steps: 100 },
            metric: MetricKind::Wql,
            seed: 0,
            parallelism: 0,
            missing: MissingPolicy::Reject,
            group_by: GroupBy::Frequency,
            greedy_best_iteration: false,
        }
    }
}

/// One source's error on one dataset.
#[derive(Debug, Clone)]
pub struct SourceScore {
    pub source: String,
    pub value: f64,
    pub relative: f64,
}

/// Everything scored on one dataset.
#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub dataset_id: String,
    pub scores: Vec<SourceScore>,
    pub weight_run: WeightRun,
}

/// The assembled run: leaderboard table, per-dataset outcomes, fitted
/// weights, aggregates, and the datasets that failed.
#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub table: Table,
    pub datasets: Vec<DatasetOutcome>,
    pub failed: Vec<(String, String)>,
    /// Geometric-mean relative error per source, over the clean datasets.
    pub aggregates: Vec<(String, f64)>,
}

impl EvaluateOutcome {
    pub fn is_clean(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn aggregate_for(&self, source: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|(s, _)| s == source)
            .map(|(_, v)| *v)
    }

    pub fn weight_runs(&self) -> Vec<&WeightRun> {
        self.datasets.iter().map(|d| &d.weight_run).collect()
    }
}

/// One evaluation window: per-item train prefixes and the window's actuals.
struct EvalWindow {
    window_id: u32,
    train: Vec<TimeSeries>,
    actuals: PointMatrix,
}

/// Runs the full benchmark. Per-dataset errors mark the dataset failed and
/// exclude it from the aggregate; the run continues.
pub fn evaluate(
    manifest: &BenchmarkManifest,
    portfolio: &Portfolio,
    config: &RunConfig,
) -> Result<EvaluateOutcome, HarnessError> {
    let baseline_is_member = portfolio.member(&manifest.baseline).is_some();
    if !baseline_is_member && manifest.baseline != "seasonal_naive" {
        return Err(HarnessError::Config {
            reason: format!(
                "baseline `{}` is neither a portfolio member nor the builtin seasonal_naive",
                manifest.baseline
            ),
        });
    }

    // ingest external forecast files once, up front
    let mut externals: HashMap<String, ExternalForecasts> = HashMap::new();
    for member in portfolio.members() {
        if let MemberSource::External { path } = &member.source {
            externals.insert(member.id.clone(), read_external_forecasts(path)?);
        }
    }

    let run_one = |entry: &DatasetEntry| {
        eval_dataset(entry, manifest, portfolio, &externals, config)
            .map_err(|e| (entry.id.clone(), e.to_string()))
    };
    let results: Vec<Result<DatasetOutcome, (String, String)>> = if config.parallelism == 1 {
        manifest.datasets.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| HarnessError::Config {
                reason: format!("cannot build worker pool: {e}"),
            })?;
        pool.install(|| manifest.datasets.par_iter().map(run_one).collect())
    };

    let mut datasets = Vec::new();
    let mut failed = Vec::new();
    for result in results {
        match result {
            Ok(outcome) => datasets.push(outcome),
            Err(pair) => failed.push(pair),
        }
    }

    // source order is identical on every clean dataset
    let source_order: Vec<String> = datasets
        .first()
        .map(|d| d.scores.iter().map(|s| s.source.clone()).collect())
        .unwrap_or_default();
    let mut aggregates = Vec::new();
    for source in &source_order {
        let relatives: Vec<f64> = datasets
            .iter()
            .flat_map(|d| d.scores.iter().filter(|s| &s.source == source))
            .map(|s| s.relative)
            .collect();
        if !relatives.is_empty() {
            aggregates.push((source.clone(), geometric_mean_aggregate(&relatives)?));
        }
    }

    let table = assemble_table(manifest, config, &datasets, &failed, &aggregates);
    Ok(EvaluateOutcome {
        table,
        datasets,
        failed,
        aggregates,
    })
}

fn assemble_table(
    manifest: &BenchmarkManifest,
    config: &RunConfig,
    datasets: &[DatasetOutcome],
    failed: &[(String, String)],
    aggregates: &[(String, f64)],
) -> Table {
    let mut table = Table::new(
        ["dataset_id", "source", "metric", "value", "relative_error", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let metric = config.metric.as_str().to_string();
    let by_id: HashMap<&str, &DatasetOutcome> = datasets
        .iter()
        .map(|d| (d.dataset_id.as_str(), d))
        .collect();
    let failed_by_id: HashMap<&str, &str> = failed
        .iter()
        .map(|(id, reason)| (id.as_str(), reason.as_str()))
        .collect();
    for entry in &manifest.datasets {
        if let Some(outcome) = by_id.get(entry.id.as_str()) {
            for score in &outcome.scores {
                table.push_row(vec![
                    entry.id.clone(),
                    score.source.clone(),
                    metric.clone(),
                    fmt_float(score.value),
                    fmt_float(score.relative),
                    "ok".into(),
                ]);
            }
        } else if let Some(reason) = failed_by_id.get(entry.id.as_str()) {
            table.push_row(vec![
                entry.id.clone(),
                String::new(),
                metric.clone(),
                String::new(),
                String::new(),
                format!("failed: {reason}"),
            ]);
        }
    }
    let footnote = if failed.is_empty() {
        format!("geometric mean over {} datasets", datasets.len())
    } else {
        format!(
            "geometric mean over {} datasets; excluded failed: {}",
            datasets.len(),
            failed
                .iter()
                .map(|(id, _)| id.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        )
    };
    for (source, value) in aggregates {
        table.push_row(vec![
            "(aggregate)".into(),
            source.clone(),
            metric.clone(),
            String::new(),
            fmt_float(*value),
            footnote.clone(),
        ]);
    }
    table
}

fn eval_dataset(
    entry: &DatasetEntry,
    manifest: &BenchmarkManifest,
    portfolio: &Portfolio,
    externals: &HashMap<String, ExternalForecasts>,
    config: &RunConfig,
) -> Result<DatasetOutcome, HarnessError> {
    let frequency = entry.resolved_frequency()?;
    let season_length = frequency.season_length;
    let series_list = load_series_csv(&entry.path, frequency, &entry.domain, config.missing)?;
    let task = ForecastTask::new(entry.horizon, season_length)?
        .with_context_limit(entry.context_limit);

    // Build the evaluation windows and note which ones are scored.
    let (windows, scored): (Vec<EvalWindow>, Vec<usize>) = if entry.n_windows == 1 {
        let mut val_train = Vec::new();
        let mut val_rows = Vec::new();
        let mut test_train = Vec::new();
        let mut test_rows = Vec::new();
        for series in &series_list {
            let split = split_holdout(series, entry.horizon, true)?;
            let mut through_validation = split.train.values.clone();
            through_validation.extend_from_slice(&split.validation_actuals);
            test_train.push(TimeSeries::new(
                series.id.clone(),
                through_validation,
                series.start.clone(),
                frequency,
                series.domain.clone(),
            )?);
            val_rows.push(split.validation_actuals.clone());
            test_rows.push(split.test_actuals.clone().expect("holdout test window"));
            val_train.push(split.train);
        }
        (
            vec![
                EvalWindow {
                    window_id: 0,
                    train: val_train,
                    actuals: PointMatrix::from_rows(&val_rows)?,
                },
                EvalWindow {
                    window_id: 1,
                    train: test_train,
                    actuals: PointMatrix::from_rows(&test_rows)?,
                },
            ],
            vec![1],
        )
    } else {
        let per_series: Vec<Vec<crate::series::EvaluationSplit>> = series_list
            .iter()
            .map(|s| rolling_windows(s, entry.horizon, entry.n_windows, entry.stride_or_default()))
            .collect::<Result<_, _>>()?;
        let mut windows = Vec::with_capacity(entry.n_windows);
        for k in 0..entry.n_windows {
            let train: Vec<TimeSeries> =
                per_series.iter().map(|splits| splits[k].train.clone()).collect();
            let rows: Vec<Vec<f64>> = per_series
                .iter()
                .map(|splits| splits[k].validation_actuals.clone())
                .collect();
            windows.push(EvalWindow {
                window_id: k as u32,
                train,
                actuals: PointMatrix::from_rows(&rows)?,
            });
        }
        (windows, (0..entry.n_windows).collect())
    };

    // Every member forecasts every window.
    let item_ids: Vec<String> = series_list.iter().map(|s| s.id.clone()).collect();
    let mut window_forecasts: Vec<Vec<(String, QuantileForecast)>> =
        Vec::with_capacity(windows.len());
    for window in &windows {
        let mut members = Vec::with_capacity(portfolio.members().len());
        for member in portfolio.members() {
            let forecast = match &member.source {
                MemberSource::Builtin { model } => {
                    model.forecaster().forecast(&window.train, &task)?
                }
                MemberSource::External { .. } => externals
                    .get(&member.id)
                    .expect("external forecasts ingested up front")
                    .aligned(
                        &entry.id,
                        window.window_id,
                        &item_ids,
                        &task.quantile_levels,
                    )?,
            };
            if forecast.horizon() != entry.horizon {
                return Err(HarnessError::Dataset {
                    id: entry.id.clone(),
                    reason: format!(
                        "member `{}` produced horizon {} instead of {}",
                        member.id,
                        forecast.horizon(),
                        entry.horizon
                    ),
                });
            }
            members.push((member.id.clone(), forecast));
        }
        window_forecasts.push(members);
    }

    // Fit the combiner on the selection window (always window 0).
    let selection_window = &windows[0];
    let scorer = match config.metric {
        MetricKind::Wql => WindowScorer::wql(
            selection_window.actuals.clone(),
            task.quantile_levels.clone(),
        ),
        MetricKind::Mase => WindowScorer::mase(
            selection_window.actuals.clone(),
            &selection_window.train,
            season_length,
        )?,
    };
    let selection = select_best(&window_forecasts[0], &scorer)?;
    let member_ids: Vec<String> = portfolio.members().iter().map(|m| m.id.clone()).collect();
    let weights: EnsembleWeights = match config.combiner {
        Combiner::Best => {
            let chosen = member_ids
                .iter()
                .position(|id| *id == selection.chosen_member_id)
                .expect("chosen member is in the portfolio");
            let mut counts = vec![0u64; member_ids.len()];
            counts[chosen] = 1;
            EnsembleWeights::from_counts(member_ids.clone(), counts, 1, vec![chosen])?
        }
        Combiner::Greedy { steps } => greedy_ensemble_selection_opts(
            &window_forecasts[0],
            &scorer,
            steps,
            config.greedy_best_iteration,
        )?,
        Combiner::SimpleAverage => simple_average_weights(&member_ids)?,
        Combiner::PerformanceWeighted => performance_weighted(&selection.validation_losses)?,
    };

    // Apply the fixed combination to every scored window.
    let combined_per_window: Vec<QuantileForecast> = scored
        .iter()
        .map(|&w| match config.combiner {
            Combiner::Best => {
                let chosen = member_ids
                    .iter()
                    .position(|id| *id == selection.chosen_member_id)
                    .expect("chosen member is in the portfolio");
                Ok(window_forecasts[w][chosen].1.clone())
            }
            _ => combine_forecasts(&weights, &window_forecasts[w]),
        })
        .collect::<Result<_, _>>()?;

    // Pool the scored windows into one (item x window) evaluation set.
    let mut pooled_rows = Vec::new();
    let mut pooled_train = Vec::new();
    for &w in &scored {
        let window = &windows[w];
        for item in 0..window.actuals.n_items() {
            pooled_rows.push(window.actuals.row(item).to_vec());
            pooled_train.push(window.train[item].clone());
        }
    }
    let pooled_actuals = PointMatrix::from_rows(&pooled_rows)?;
    let score_tensors = |tensors: Vec<QuantileForecast>| -> Result<f64, HarnessError> {
        let stacked = QuantileForecast::stack(tensors)?;
        match config.metric {
            MetricKind::Wql => Ok(wql(&stacked, &pooled_actuals)?),
            MetricKind::Mase => Ok(mase(
                &median_point(&stacked)?,
                &pooled_actuals,
                &pooled_train,
                season_length,
            )?),
        }
    };

    let mut scores: Vec<SourceScore> = Vec::new();
    for (idx, id) in member_ids.iter().enumerate() {
        let tensors: Vec<QuantileForecast> = scored
            .iter()
            .map(|&w| window_forecasts[w][idx].1.clone())
            .collect();
        scores.push(SourceScore {
            source: id.clone(),
            value: score_tensors(tensors)?,
            relative: f64::NAN,
        });
    }
    if portfolio.member(&manifest.baseline).is_none() {
        // implicit matched seasonal naive baseline
        use crate::baselines::Forecaster;
        let naive = crate::baselines::SeasonalNaive {
            season_length: None,
        };
        let tensors: Vec<QuantileForecast> = scored
            .iter()
            .map(|&w| naive.forecast(&windows[w].train, &task))
            .collect::<Result<_, _>>()?;
        scores.push(SourceScore {
            source: manifest.baseline.clone(),
            value: score_tensors(tensors)?,
            relative: f64::NAN,
        });
    }
    scores.push(SourceScore {
        source: format!("portfolio({})", config.combiner.label()),
        value: score_tensors(combined_per_window)?,
        relative: f64::NAN,
    });

    let baseline_value = scores
        .iter()
        .find(|s| s.source == manifest.baseline)
        .map(|s| s.value)
        .expect("baseline source was scored");
    let baseline_score = DatasetScore {
        dataset_id: entry.id.clone(),
        metric: config.metric,
        value: baseline_value,
        baseline_value,
    };
    for score in &mut scores {
        let model_score = DatasetScore {
            dataset_id: entry.id.clone(),
            metric: config.metric,
            value: score.value,
            baseline_value,
        };
        score.relative = relative_error(&model_score, &baseline_score);
    }

    let group_tag = match config.group_by {
        GroupBy::Domain => {
            if entry.domain.is_empty() {
                "unspecified".to_string()
            } else {
                entry.domain.clone()
            }
        }
        GroupBy::Frequency => entry.frequency.clone(),
    };
    Ok(DatasetOutcome {
        dataset_id: entry.id.clone(),
        scores,
        weight_run: WeightRun {
            task_id: entry.id.clone(),
            group_tag,
            weights,
        },
    })
}
