//! Analytical test-time FLOPs accounting for encoder-decoder forecasters.
//!
//! The forward-pass cost model is
//! `(L_e + L_d) * T * d^2 * (24 + 4T/d)`, evaluated in integer arithmetic as
//! `(L_e + L_d) * T * d * (24d + 4T)` so every output is exact. A training
//! step is costed at three forward passes (forward plus a backward at about
//! twice the forward cost).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComputeError {
    #[error("fine-tune accounting needs gradient steps, batch size, and test series count")]
    MissingExtras,
    #[error("member count must be at least 1")]
    NoMembers,
    #[error("architecture profile fields must all be positive")]
    InvalidProfile,
}

/// Default effective sequence length: a 2048-observation context patched
/// into tokens of 16 observations.
pub const DEFAULT_SEQ_LEN: u64 = 128;

/// Transformer shape parameters that drive the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureProfile {
    pub encoder_layers: u64,
    pub decoder_layers: u64,
    pub model_dim: u64,
    /// Effective sequence length in encoder tokens.
    #[serde(default = "default_seq_len")]
    pub seq_len: u64,
}

fn default_seq_len() -> u64 {
    DEFAULT_SEQ_LEN
}

impl ArchitectureProfile {
    pub fn new(
        encoder_layers: u64,
        decoder_layers: u64,
        model_dim: u64,
        seq_len: u64,
    ) -> Result<Self, ComputeError> {
        if encoder_layers == 0 || decoder_layers == 0 || model_dim == 0 || seq_len == 0 {
            return Err(ComputeError::InvalidProfile);
        }
        Ok(Self {
            encoder_layers,
            decoder_layers,
            model_dim,
            seq_len,
        })
    }

    /// The four built-in profiles, smallest to largest.
    pub const NAMED: [(&'static str, ArchitectureProfile); 4] = [
        (
            "1m",
            ArchitectureProfile {
                encoder_layers: 2,
                decoder_layers: 1,
                model_dim: 128,
                seq_len: DEFAULT_SEQ_LEN,
            },
        ),
        (
            "2m",
            ArchitectureProfile {
                encoder_layers: 2,
                decoder_layers: 2,
                model_dim: 160,
                seq_len: DEFAULT_SEQ_LEN,
            },
        ),
        (
            "4m",
            ArchitectureProfile {
                encoder_layers: 3,
                decoder_layers: 3,
                model_dim: 192,
                seq_len: DEFAULT_SEQ_LEN,
            },
        ),
        (
            "tiny",
            ArchitectureProfile {
                encoder_layers: 4,
                decoder_layers: 4,
                model_dim: 256,
                seq_len: DEFAULT_SEQ_LEN,
            },
        ),
    ];

    pub fn named(name: &str) -> Option<ArchitectureProfile> {
        Self::NAMED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| *p)
    }
}

/// FLOPs of one forward pass.
pub fn flops_forward(profile: &ArchitectureProfile) -> u64 {
    let layers = profile.encoder_layers + profile.decoder_layers;
    layers
        * profile.seq_len
        * profile.model_dim
        * (24 * profile.model_dim + 4 * profile.seq_len)
}

/// FLOPs of one training step: forward plus backward at twice the cost.
pub fn flops_train_step(profile: &ArchitectureProfile) -> u64 {
    3 * flops_forward(profile)
}

/// How test-time compute is spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// One forward pass, no adaptation.
    ZeroShot,
    /// Infer with each of the N members once, then once more with the pick.
    ModelSelection,
    /// Selection across N members plus inference with the k models the
    /// ensemble actually uses.
    GreedyEnsemble,
    /// Gradient steps on the target task, amortized per test series, plus
    /// one forward pass.
    FineTune,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::ModelSelection => "model_selection",
            Strategy::GreedyEnsemble => "greedy_ensemble",
            Strategy::FineTune => "fine_tune",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "zero_shot" => Some(Strategy::ZeroShot),
            "model_selection" => Some(Strategy::ModelSelection),
            "greedy_ensemble" => Some(Strategy::GreedyEnsemble),
            "fine_tune" => Some(Strategy::FineTune),
            _ => None,
        }
    }
}

/// Fine-tuning cost inputs. Batch size is an explicit input rather than a
/// constant so the assumption is visible in every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineTuneExtras {
    pub gradient_steps: u64,
    pub batch_size: u64,
    pub test_series: u64,
}

/// Optional measured quantities feeding [`strategy_flops`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StrategyInputs {
    /// Distinct members with nonzero weight in an actual ensembling run.
    /// Absent, the reported historical average of 2.5 is used.
    pub ensemble_selected: Option<u32>,
    pub fine_tune: Option<FineTuneExtras>,
}

/// Average ensemble fan-out used when no measured run is supplied.
pub const DEFAULT_ENSEMBLE_FANOUT: f64 = 2.5;

/// Total and amortized test-time FLOPs for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputeReport {
    pub strategy: Strategy,
    pub total_flops: f64,
    /// Cost per future inference once the one-time selection or tuning cost
    /// has been written off.
    pub amortized_flops: f64,
    pub n_members: u32,
    pub detail: Vec<(String, f64)>,
}

/// Costs a test-time strategy over a portfolio of `n_members` models that
/// share `profile`.
pub fn strategy_flops(
    strategy: Strategy,
    profile: &ArchitectureProfile,
    n_members: u32,
    inputs: &StrategyInputs,
) -> Result<ComputeReport, ComputeError> {
    if n_members == 0 {
        return Err(ComputeError::NoMembers);
    }
    let forward = flops_forward(profile) as f64;
    let n = n_members as f64;
    let report = match strategy {
        Strategy::ZeroShot => ComputeReport {
            strategy,
            total_flops: forward,
            amortized_flops: forward,
            n_members,
            detail: vec![("inference_forward".into(), forward)],
        },
        Strategy::ModelSelection => {
            // (N + 1) forwards: each member once for selection, then the pick
            let total = ((n_members as u64 + 1) * flops_forward(profile)) as f64;
            ComputeReport {
                strategy,
                total_flops: total,
                amortized_flops: forward,
                n_members,
                detail: vec![
                    ("selection_forwards".into(), n * forward),
                    ("inference_forward".into(), forward),
                ],
            }
        }
        Strategy::GreedyEnsemble => {
            let fanout = inputs
                .ensemble_selected
                .map(|k| k as f64)
                .unwrap_or(DEFAULT_ENSEMBLE_FANOUT);
            ComputeReport {
                strategy,
                total_flops: (n + fanout) * forward,
                amortized_flops: fanout * forward,
                n_members,
                detail: vec![
                    ("selection_forwards".into(), n * forward),
                    ("ensemble_inference_forwards".into(), fanout * forward),
                ],
            }
        }
        Strategy::FineTune => {
            let extras = inputs.fine_tune.ok_or(ComputeError::MissingExtras)?;
            if extras.gradient_steps == 0 || extras.batch_size == 0 || extras.test_series == 0 {
                return Err(ComputeError::MissingExtras);
            }
            let tuning = (extras.gradient_steps as f64)
                * (extras.batch_size as f64)
                * (flops_train_step(profile) as f64)
                / extras.test_series as f64;
            ComputeReport {
                strategy,
                total_flops: tuning + forward,
                amortized_flops: forward,
                n_members,
                detail: vec![
                    ("tuning_per_test_series".into(), tuning),
                    ("inference_forward".into(), forward),
                ],
            }
        }
    };
    debug_assert!(report.amortized_flops <= report.total_flops);
    Ok(report)
}
