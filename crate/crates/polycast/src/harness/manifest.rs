//! Benchmark manifest (JSON) and long-format dataset CSV loading.
//!
//! A manifest lists datasets with their evaluation metadata:
//!
//! ```json
//! {
//!   "name": "desk-bench",
//!   "baseline": "seasonal_naive",
//!   "datasets": [
//!     {"id": "sales", "path": "sales.csv", "frequency": "daily",
//!      "horizon": 7, "domain": "retail"}
//!   ]
//! }
//! ```
//!
//! Dataset files are UTF-8 CSVs with columns `item_id,timestamp,target`,
//! rows per item in chronological order. Horizons, season lengths, and
//! window counts are explicit manifest inputs, never inferred.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::series::{Frequency, FrequencyLabel, TimeSeries};

/// One dataset in a benchmark manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    /// Data file; relative paths resolve against the manifest location.
    pub path: PathBuf,
    /// Frequency label, e.g. `"daily"` or `"15min"`.
    pub frequency: String,
    /// Season length; defaults to the frequency's conventional value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season_length: Option<usize>,
    pub horizon: usize,
    #[serde(default)]
    pub domain: String,
    /// Rolling evaluation windows; 1 means a plain holdout evaluation.
    #[serde(default = "default_n_windows")]
    pub n_windows: usize,
    /// Stride between rolling windows; defaults to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_limit: Option<usize>,
}

fn default_n_windows() -> usize {
    1
}

impl DatasetEntry {
    pub fn frequency_label(&self) -> Result<FrequencyLabel, HarnessError> {
        FrequencyLabel::parse(&self.frequency).ok_or_else(|| HarnessError::Dataset {
            id: self.id.clone(),
            reason: format!("unknown frequency label `{}`", self.frequency),
        })
    }

    pub fn resolved_frequency(&self) -> Result<Frequency, HarnessError> {
        let label = self.frequency_label()?;
        let season_length = self
            .season_length
            .unwrap_or_else(|| label.default_season_length());
        Frequency::new(label, season_length).map_err(|e| HarnessError::Dataset {
            id: self.id.clone(),
            reason: e.to_string(),
        })
    }

    pub fn stride_or_default(&self) -> usize {
        self.stride.unwrap_or(self.horizon)
    }
}

/// A benchmark: datasets plus the member id used as the relative-error
/// baseline. The default baseline is the matched seasonal naive, evaluated
/// implicitly when no portfolio member carries that id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub datasets: Vec<DatasetEntry>,
    #[serde(default = "default_baseline")]
    pub baseline: String,
}

fn default_baseline() -> String {
    "seasonal_naive".to_string()
}

/// Loads and validates a manifest: unique ids, parseable frequencies,
/// positive horizons and window counts, and every data file present.
pub fn load_manifest(path: &Path) -> Result<BenchmarkManifest, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Manifest {
        reason: format!("cannot read `{}`: {e}", path.display()),
    })?;
    let mut manifest: BenchmarkManifest = serde_json::from_str(&text)?;
    if manifest.datasets.is_empty() {
        return Err(HarnessError::Manifest {
            reason: "manifest lists no datasets".into(),
        });
    }
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = HashSet::new();
    for entry in &mut manifest.datasets {
        if !seen.insert(entry.id.clone()) {
            return Err(HarnessError::Manifest {
                reason: format!("duplicate dataset id `{}`", entry.id),
            });
        }
        if entry.horizon == 0 || entry.n_windows == 0 || entry.stride == Some(0) {
            return Err(HarnessError::Dataset {
                id: entry.id.clone(),
                reason: "horizon, n_windows, and stride must be positive".into(),
            });
        }
        entry.frequency_label()?;
        if entry.path.is_relative() {
            entry.path = base_dir.join(&entry.path);
        }
        if !entry.path.is_file() {
            return Err(HarnessError::Dataset {
                id: entry.id.clone(),
                reason: format!("data file `{}` does not exist", entry.path.display()),
            });
        }
    }
    Ok(manifest)
}

/// How to treat missing target values at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Reject the dataset; the safe default.
    #[default]
    Reject,
    /// Forward-fill from the previous observation of the same item.
    ForwardFill,
}

fn is_missing(raw: &str) -> bool {
    raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw.eq_ignore_ascii_case("na")
}

/// Loads a long-format dataset CSV into one series per item, items ordered
/// by first appearance and observations in file order.
pub fn load_series_csv(
    path: &Path,
    frequency: Frequency,
    domain: &str,
    missing: MissingPolicy,
) -> Result<Vec<TimeSeries>, HarnessError> {
    let file = std::fs::File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));

    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Manifest {
                reason: format!("`{}` is missing the `{name}` column", path.display()),
            })
    };
    let item_col = column("item_id")?;
    let time_col = column("timestamp")?;
    let target_col = column("target")?;

    struct Builder {
        id: String,
        start: String,
        values: Vec<f64>,
    }
    let mut order: Vec<Builder> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let item_id = record.get(item_col).unwrap_or_default().to_string();
        let timestamp = record.get(time_col).unwrap_or_default().to_string();
        let raw = record.get(target_col).unwrap_or_default();

        let slot = match index.get(&item_id) {
            Some(&i) => i,
            None => {
                index.insert(item_id.clone(), order.len());
                order.push(Builder {
                    id: item_id.clone(),
                    start: timestamp.clone(),
                    values: Vec::new(),
                });
                order.len() - 1
            }
        };
        let builder = &mut order[slot];

        let parsed = if is_missing(raw) {
            None
        } else {
            let v: f64 = raw.parse().map_err(|_| HarnessError::Manifest {
                reason: format!(
                    "`{}` line {line}: bad target value `{raw}` for item `{item_id}`",
                    path.display()
                ),
            })?;
            if v.is_nan() {
                None
            } else {
                Some(v)
            }
        };
        match parsed {
            Some(v) => builder.values.push(v),
            None => match missing {
                MissingPolicy::Reject => {
                    return Err(HarnessError::Manifest {
                        reason: format!(
                            "`{}` line {line}: missing value for item `{item_id}` \
                             (use forward-fill to impute)",
                            path.display()
                        ),
                    });
                }
                MissingPolicy::ForwardFill => match builder.values.last().copied() {
                    Some(prev) => builder.values.push(prev),
                    None => {
                        return Err(HarnessError::Manifest {
                            reason: format!(
                                "`{}` line {line}: item `{item_id}` starts with a missing value",
                                path.display()
                            ),
                        });
                    }
                },
            },
        }
    }

    if order.is_empty() {
        return Err(HarnessError::Manifest {
            reason: format!("`{}` contains no rows", path.display()),
        });
    }
    order
        .into_iter()
        .map(|b| TimeSeries::new(b.id, b.values, b.start, frequency, domain).map_err(Into::into))
        .collect()
}
