//! Portfolio membership: specialization metadata, builtin and external
//! forecast sources, and the forecast exchange format that lets externally
//! produced predictions join a portfolio.
//!
//! The exchange format is a UTF-8 CSV with header
//! `task_id,window_id,item_id,step,quantile,value`. Steps are 1-based within
//! the forecast horizon, rows may appear in any order, and duplicate keys are
//! rejected. Values round-trip bit-exactly because floats are printed with
//! full shortest-round-trip precision.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{ArQuantile, Drift, Forecaster, SeasonalNaive};
use crate::compute::ArchitectureProfile;
use crate::series::{
    crossing_count, enforce_monotone_quantiles, validate_quantile_levels, QuantileForecast,
    SeriesError,
};

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("portfolio has no members")]
    EmptyPortfolio,
    #[error("duplicate member id `{id}`")]
    DuplicateMemberId { id: String },
    #[error("forecast file schema error at line {line}: {reason}")]
    SchemaError { line: u64, reason: String },
    #[error("incomplete forecast coverage for task `{task_id}` window {window_id}: {detail}")]
    CoverageError {
        task_id: String,
        window_id: u32,
        detail: String,
    },
    #[error("no forecast for task `{task_id}` window {window_id}")]
    MissingForecast { task_id: String, window_id: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// What slice of the data distribution a member was built for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Specialization {
    Generalist,
    Frequency { label: String },
    Domain { tag: String },
}

impl Specialization {
    pub fn describe(&self) -> String {
        match self {
            Specialization::Generalist => "generalist".into(),
            Specialization::Frequency { label } => format!("frequency:{label}"),
            Specialization::Domain { tag } => format!("domain:{tag}"),
        }
    }

    pub fn is_generalist(&self) -> bool {
        matches!(self, Specialization::Generalist)
    }
}

/// Builtin forecaster configuration for desk-scale members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BuiltinModel {
    /// `season_length: None` uses the task's season length.
    SeasonalNaive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        season_length: Option<usize>,
    },
    ArQuantile { order: usize },
    Drift,
}

impl BuiltinModel {
    pub fn forecaster(&self) -> Box<dyn Forecaster> {
        match self {
            BuiltinModel::SeasonalNaive { season_length } => Box::new(SeasonalNaive {
                season_length: *season_length,
            }),
            BuiltinModel::ArQuantile { order } => Box::new(ArQuantile { order: *order }),
            BuiltinModel::Drift => Box::new(Drift),
        }
    }
}

/// Where a member's forecasts come from: a builtin forecaster fitted on the
/// fly, or a file of externally produced forecasts carried per evaluation
/// window. External members never ship model weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MemberSource {
    Builtin {
        #[serde(flatten)]
        model: BuiltinModel,
    },
    External { path: PathBuf },
}

/// One forecast source in a portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioMember {
    pub id: String,
    pub specialization: Specialization,
    pub source: MemberSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<ArchitectureProfile>,
}

/// A named, nonempty collection of members with unique ids. Declaration
/// order is the tie-breaking order everywhere downstream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Portfolio {
    name: String,
    members: Vec<PortfolioMember>,
}

impl Portfolio {
    pub fn new(
        name: impl Into<String>,
        members: Vec<PortfolioMember>,
    ) -> Result<Self, PortfolioError> {
        if members.is_empty() {
            return Err(PortfolioError::EmptyPortfolio);
        }
        let mut seen = HashSet::new();
        for member in &members {
            if !seen.insert(member.id.clone()) {
                return Err(PortfolioError::DuplicateMemberId {
                    id: member.id.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            members,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[PortfolioMember] {
        &self.members
    }

    pub fn member(&self, id: &str) -> Option<&PortfolioMember> {
        self.members.iter().find(|m| m.id == id)
    }
}

/// Order-preserving subset of a portfolio by specialization predicate.
pub fn filter_members(
    portfolio: &Portfolio,
    predicate: impl Fn(&Specialization) -> bool,
) -> Result<Portfolio, PortfolioError> {
    let members: Vec<PortfolioMember> = portfolio
        .members
        .iter()
        .filter(|m| predicate(&m.specialization))
        .cloned()
        .collect();
    Portfolio::new(portfolio.name.clone(), members)
}

/// Externally produced forecasts keyed by (task, evaluation window).
#[derive(Debug, Clone, Default)]
pub struct ExternalForecasts {
    forecasts: BTreeMap<(String, u32), QuantileForecast>,
    /// (item, step) pairs whose quantiles needed isotonic correction at
    /// ingest.
    pub corrected_crossings: usize,
}

impl ExternalForecasts {
    pub fn get(&self, task_id: &str, window_id: u32) -> Option<&QuantileForecast> {
        self.forecasts.get(&(task_id.to_string(), window_id))
    }

    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, u32), &QuantileForecast)> {
        self.forecasts.iter()
    }

    /// The forecast for one (task, window), with items permuted into
    /// `item_ids` order and quantile levels checked against the task grid.
    pub fn aligned(
        &self,
        task_id: &str,
        window_id: u32,
        item_ids: &[String],
        quantile_levels: &[f64],
    ) -> Result<QuantileForecast, PortfolioError> {
        let forecast =
            self.get(task_id, window_id)
                .ok_or_else(|| PortfolioError::MissingForecast {
                    task_id: task_id.to_string(),
                    window_id,
                })?;
        let coverage = |detail: String| PortfolioError::CoverageError {
            task_id: task_id.to_string(),
            window_id,
            detail,
        };
        if forecast.quantile_levels() != quantile_levels {
            return Err(coverage(format!(
                "quantile levels {:?} do not match the task's {:?}",
                forecast.quantile_levels(),
                quantile_levels
            )));
        }
        let n_levels = quantile_levels.len();
        let horizon = forecast.horizon();
        let mut values = Vec::with_capacity(item_ids.len() * horizon * n_levels);
        for wanted in item_ids {
            let pos = forecast
                .item_ids()
                .iter()
                .position(|id| id == wanted)
                .ok_or_else(|| coverage(format!("missing item `{wanted}`")))?;
            let base = pos * horizon * n_levels;
            values.extend_from_slice(&forecast.values()[base..base + horizon * n_levels]);
        }
        Ok(QuantileForecast::new(
            item_ids.to_vec(),
            horizon,
            quantile_levels.to_vec(),
            values,
        )?)
    }
}

const EXCHANGE_HEADER: [&str; 6] = ["task_id", "window_id", "item_id", "step", "quantile", "value"];

/// Parses a forecast exchange CSV. Every (task, window) group must cover a
/// dense (item, step, level) grid; crossing quantiles are corrected with a
/// running maximum and counted.
pub fn ingest_external_forecasts<R: Read>(reader: R) -> Result<ExternalForecasts, PortfolioError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader.headers()?;
        if headers.iter().collect::<Vec<_>>() != EXCHANGE_HEADER {
            return Err(PortfolioError::SchemaError {
                line: 1,
                reason: format!(
                    "expected header `{}`, got `{}`",
                    EXCHANGE_HEADER.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }

    // (task, window) -> (item, step, level bits) -> value
    type GroupCells = HashMap<(String, usize, u64), f64>;
    let mut groups: BTreeMap<(String, u32), GroupCells> = BTreeMap::new();

    for record in csv_reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        let schema_err = |reason: String| PortfolioError::SchemaError { line, reason };
        if record.len() != 6 {
            return Err(schema_err(format!("expected 6 fields, got {}", record.len())));
        }
        let task_id = record[0].to_string();
        let window_id: u32 = record[1]
            .parse()
            .map_err(|_| schema_err(format!("bad window_id `{}`", &record[1])))?;
        let item_id = record[2].to_string();
        let step: usize = record[3]
            .parse()
            .map_err(|_| schema_err(format!("bad step `{}`", &record[3])))?;
        if step == 0 {
            return Err(schema_err("step must be 1-based".into()));
        }
        let quantile: f64 = record[4]
            .parse()
            .map_err(|_| schema_err(format!("bad quantile `{}`", &record[4])))?;
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(schema_err(format!("quantile {quantile} outside (0, 1)")));
        }
        let value: f64 = record[5]
            .parse()
            .map_err(|_| schema_err(format!("bad value `{}`", &record[5])))?;
        if !value.is_finite() {
            return Err(schema_err(format!("non-finite value `{}`", &record[5])));
        }
        let cells = groups.entry((task_id, window_id)).or_default();
        if cells
            .insert((item_id.clone(), step, quantile.to_bits()), value)
            .is_some()
        {
            return Err(schema_err(format!(
                "duplicate key item `{item_id}` step {step} quantile {quantile}"
            )));
        }
    }

    let mut out = ExternalForecasts::default();
    for ((task_id, window_id), cells) in groups {
        let coverage = |detail: String| PortfolioError::CoverageError {
            task_id: task_id.clone(),
            window_id,
            detail,
        };
        let mut item_ids: Vec<String> = cells
            .keys()
            .map(|(item, _, _)| item.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        item_ids.sort();
        let horizon = cells.keys().map(|&(_, step, _)| step).max().unwrap_or(0);
        let mut level_bits: Vec<u64> = cells
            .keys()
            .map(|&(_, _, bits)| bits)
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        level_bits.sort(); // positive floats sort correctly by bit pattern
        let levels: Vec<f64> = level_bits.iter().map(|&b| f64::from_bits(b)).collect();
        validate_quantile_levels(&levels)?;

        let mut values = Vec::with_capacity(item_ids.len() * horizon * levels.len());
        for item in &item_ids {
            for step in 1..=horizon {
                for &bits in &level_bits {
                    let value = cells.get(&(item.clone(), step, bits)).ok_or_else(|| {
                        coverage(format!(
                            "missing item `{item}` step {step} quantile {}",
                            f64::from_bits(bits)
                        ))
                    })?;
                    values.push(*value);
                }
            }
        }
        let forecast = QuantileForecast::new(item_ids, horizon, levels, values)?;
        let crossings = crossing_count(&forecast);
        let forecast = if crossings > 0 {
            enforce_monotone_quantiles(&forecast)
        } else {
            forecast
        };
        out.corrected_crossings += crossings;
        out.forecasts.insert((task_id, window_id), forecast);
    }
    Ok(out)
}

/// Opens and ingests a forecast exchange file.
pub fn read_external_forecasts(path: &Path) -> Result<ExternalForecasts, PortfolioError> {
    let file = std::fs::File::open(path)?;
    ingest_external_forecasts(std::io::BufReader::new(file))
}

/// Writes forecasts in the exchange format, groups sorted by (task, window),
/// floats printed with full round-trip precision.
pub fn write_external_forecasts<'a, W: Write>(
    mut writer: W,
    entries: impl IntoIterator<Item = (&'a str, u32, &'a QuantileForecast)>,
) -> Result<(), PortfolioError> {
    let mut sorted: Vec<(&str, u32, &QuantileForecast)> = entries.into_iter().collect();
    sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    writeln!(writer, "{}", EXCHANGE_HEADER.join(","))?;
    for (task_id, window_id, forecast) in sorted {
        let levels = forecast.quantile_levels();
        for (item_idx, item_id) in forecast.item_ids().iter().enumerate() {
            for step in 0..forecast.horizon() {
                for (level_idx, &q) in levels.iter().enumerate() {
                    writeln!(
                        writer,
                        "{task_id},{window_id},{item_id},{},{q},{}",
                        step + 1,
                        forecast.value(item_idx, step, level_idx)
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn member(id: &str, spec: Specialization) -> PortfolioMember {
        PortfolioMember {
            id: id.into(),
            specialization: spec,
            source: MemberSource::Builtin {
                model: BuiltinModel::SeasonalNaive {
                    season_length: None,
                },
            },
            architecture: None,
        }
    }

    fn freq(label: &str) -> Specialization {
        Specialization::Frequency {
            label: label.into(),
        }
    }

    #[test]
    fn portfolio_requires_unique_member_ids() {
        let err = Portfolio::new(
            "p",
            vec![
                member("a", Specialization::Generalist),
                member("a", freq("daily")),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, PortfolioError::DuplicateMemberId { .. }));
        assert!(matches!(
            Portfolio::new("p", vec![]),
            Err(PortfolioError::EmptyPortfolio)
        ));
    }

    #[test]
    fn filtering_drops_generalists_in_order() {
        let portfolio = Portfolio::new(
            "p",
            vec![
                member("gen", Specialization::Generalist),
                member("hourly", freq("hourly")),
                member("daily", freq("daily")),
            ],
        )
        .unwrap();
        let specialists = filter_members(&portfolio, |s| !s.is_generalist()).unwrap();
        let ids: Vec<&str> = specialists.members().iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["hourly", "daily"]);

        let hourly_only = filter_members(&portfolio, |s| {
            matches!(s, Specialization::Frequency { label } if label == "hourly")
        })
        .unwrap();
        assert_eq!(hourly_only.members().len(), 1);

        assert!(matches!(
            filter_members(&portfolio, |_| false),
            Err(PortfolioError::EmptyPortfolio)
        ));
    }

    #[test]
    fn filters_compose() {
        let portfolio = Portfolio::new(
            "p",
            vec![
                member("gen", Specialization::Generalist),
                member("hourly", freq("hourly")),
                member("daily", freq("daily")),
                member("energy", Specialization::Domain { tag: "energy".into() }),
            ],
        )
        .unwrap();
        let p = |s: &Specialization| !s.is_generalist();
        let q = |s: &Specialization| matches!(s, Specialization::Frequency { .. });
        let chained = filter_members(&filter_members(&portfolio, p).unwrap(), q).unwrap();
        let joint = filter_members(&portfolio, |s| p(s) && q(s)).unwrap();
        assert_eq!(chained, joint);
    }

    const WELL_FORMED: &str = "\
task_id,window_id,item_id,step,quantile,value
t1,0,a,1,0.1,1.0
t1,0,a,1,0.5,2.0
t1,0,a,1,0.9,3.0
t1,0,a,2,0.1,1.5
t1,0,a,2,0.5,2.5
t1,0,a,2,0.9,3.5
t1,0,b,1,0.1,10.0
t1,0,b,1,0.5,20.0
t1,0,b,1,0.9,30.0
t1,0,b,2,0.1,15.0
t1,0,b,2,0.5,25.0
t1,0,b,2,0.9,35.0
";

    #[test]
    fn ingest_builds_the_dense_tensor() {
        let external = ingest_external_forecasts(WELL_FORMED.as_bytes()).unwrap();
        assert_eq!(external.len(), 1);
        assert_eq!(external.corrected_crossings, 0);
        let f = external.get("t1", 0).unwrap();
        assert_eq!((f.n_items(), f.horizon(), f.quantile_levels().len()), (2, 2, 3));
        assert_eq!(f.value(0, 1, 2), 3.5);
        assert_eq!(f.value(1, 0, 0), 10.0);
    }

    #[test]
    fn ingest_rejects_missing_coverage() {
        // drop one (item, step, quantile) cell
        let truncated: String = WELL_FORMED
            .lines()
            .filter(|l| !l.starts_with("t1,0,b,2,0.9"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = ingest_external_forecasts(truncated.as_bytes()).unwrap_err();
        match err {
            PortfolioError::CoverageError { detail, .. } => {
                assert!(detail.contains('b') && detail.contains("0.9"), "{detail}");
            }
            other => panic!("expected CoverageError, got {other}"),
        }
    }

    #[test]
    fn ingest_corrects_and_counts_crossings() {
        let crossing = "\
task_id,window_id,item_id,step,quantile,value
t1,0,a,1,0.1,5.0
t1,0,a,1,0.5,2.0
t1,0,a,1,0.9,7.0
";
        let external = ingest_external_forecasts(crossing.as_bytes()).unwrap();
        assert_eq!(external.corrected_crossings, 1);
        let f = external.get("t1", 0).unwrap();
        assert_eq!(f.level_slice(0, 0), &[5.0, 5.0, 7.0]);
    }

    #[test]
    fn ingest_rejects_duplicates_and_bad_headers() {
        let dup = "\
task_id,window_id,item_id,step,quantile,value
t1,0,a,1,0.5,1.0
t1,0,a,1,0.5,2.0
";
        assert!(matches!(
            ingest_external_forecasts(dup.as_bytes()),
            Err(PortfolioError::SchemaError { .. })
        ));
        let bad_header = "task,window,item,step,quantile,value\n";
        assert!(matches!(
            ingest_external_forecasts(bad_header.as_bytes()),
            Err(PortfolioError::SchemaError { line: 1, .. })
        ));
    }

    #[test]
    fn aligned_permutes_items_and_checks_levels() {
        let external = ingest_external_forecasts(WELL_FORMED.as_bytes()).unwrap();
        let aligned = external
            .aligned("t1", 0, &["b".into(), "a".into()], &[0.1, 0.5, 0.9])
            .unwrap();
        assert_eq!(aligned.item_ids(), &["b".to_string(), "a".to_string()]);
        assert_eq!(aligned.value(0, 0, 0), 10.0);
        assert_eq!(aligned.value(1, 0, 0), 1.0);

        assert!(matches!(
            external.aligned("t1", 0, &["missing".into()], &[0.1, 0.5, 0.9]),
            Err(PortfolioError::CoverageError { .. })
        ));
        assert!(matches!(
            external.aligned("t1", 0, &["a".into()], &[0.25, 0.75]),
            Err(PortfolioError::CoverageError { .. })
        ));
        assert!(matches!(
            external.aligned("t1", 9, &["a".into()], &[0.1, 0.5, 0.9]),
            Err(PortfolioError::MissingForecast { .. })
        ));
    }

    #[test]
    fn serialize_then_ingest_is_stable() {
        let external = ingest_external_forecasts(WELL_FORMED.as_bytes()).unwrap();
        let mut bytes = Vec::new();
        write_external_forecasts(
            &mut bytes,
            external.iter().map(|((t, w), f)| (t.as_str(), *w, f)),
        )
        .unwrap();
        let again = ingest_external_forecasts(bytes.as_slice()).unwrap();
        assert_eq!(external.len(), again.len());
        for ((key, f), (key2, g)) in external.iter().zip(again.iter()) {
            assert_eq!(key, key2);
            assert_eq!(f, g);
        }
    }

    proptest! {
        #[test]
        fn exchange_round_trip_is_bit_exact(
            values in proptest::collection::vec(-1e9f64..1e9, 12),
            window in 0u32..4,
        ) {
            let forecast = QuantileForecast::new(
                vec!["i0".into(), "i1".into()],
                2,
                vec![0.1, 0.5, 0.9],
                values,
            )
            .unwrap();
            let mut bytes = Vec::new();
            write_external_forecasts(&mut bytes, [("task", window, &forecast)]).unwrap();
            // the first ingest may correct crossings; after that the cycle
            // must be a fixed point
            let first = ingest_external_forecasts(bytes.as_slice()).unwrap();
            let mut bytes2 = Vec::new();
            write_external_forecasts(
                &mut bytes2,
                first.iter().map(|((t, w), f)| (t.as_str(), *w, f)),
            )
            .unwrap();
            let second = ingest_external_forecasts(bytes2.as_slice()).unwrap();
            prop_assert_eq!(second.corrected_crossings, 0);
            let mut bytes3 = Vec::new();
            write_external_forecasts(
                &mut bytes3,
                second.iter().map(|((t, w), f)| (t.as_str(), *w, f)),
            )
            .unwrap();
            prop_assert_eq!(&bytes2, &bytes3);
            let f1 = first.get("task", window).unwrap();
            let f2 = second.get("task", window).unwrap();
            for (a, b) in f1.values().iter().zip(f2.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn member_specs_parse_from_json() {
        let json = r#"{
            "id": "hourly",
            "specialization": {"kind": "frequency", "label": "hourly"},
            "source": {"type": "builtin", "model": "seasonal_naive", "season_length": 24}
        }"#;
        let member: PortfolioMember = serde_json::from_str(json).unwrap();
        assert_eq!(member.id, "hourly");
        assert_eq!(
            member.source,
            MemberSource::Builtin {
                model: BuiltinModel::SeasonalNaive {
                    season_length: Some(24)
                }
            }
        );

        let external: PortfolioMember = serde_json::from_str(
            r#"{
                "id": "big_model",
                "specialization": {"kind": "generalist"},
                "source": {"type": "external", "path": "forecasts.csv"},
                "architecture": {"encoder_layers": 2, "decoder_layers": 1, "model_dim": 128}
            }"#,
        )
        .unwrap();
        assert!(matches!(external.source, MemberSource::External { .. }));
        assert_eq!(external.architecture.unwrap().seq_len, 128);
    }
}
