//! Test-time combination of portfolio members: validation-based model
//! selection, greedy ensemble selection, and the simpler reference
//! combiners.
//!
//! Greedy selection adds members to an equally-weighted ensemble with
//! replacement: at step `j` it scores, for every member `m`, the ensemble
//! with weights `((j-1) * w + e_m) / j` and keeps the minimizer. The final
//! weights after the configured number of steps are returned, so every
//! weight is an exact multiple of `1/steps`. Ties break toward the earliest
//! declared member everywhere.

use thiserror::Error;

use crate::metrics::{MetricError, WindowScorer, SCALE_EPSILON};
use crate::series::QuantileForecast;

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("portfolio has no members")]
    EmptyPortfolio,
    #[error("selection steps must be at least 1")]
    NonPositiveSteps,
    #[error("weight vector does not match the member list")]
    MemberMismatch,
    #[error("member forecasts disagree on shape or quantile levels")]
    ShapeMismatch,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Simplex weights over portfolio members, with the selection trace when
/// they came from greedy selection.
///
/// Count-based ensembles (greedy, simple average) keep the integer counts so
/// combination divides by the step count exactly instead of summing rounded
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    member_ids: Vec<String>,
    weights: Vec<f64>,
    counts: Option<Vec<u64>>,
    trace: Vec<usize>,
    steps: u64,
}

impl EnsembleWeights {
    /// Weights `counts[i] / steps` from an integer selection count vector.
    pub fn from_counts(
        member_ids: Vec<String>,
        counts: Vec<u64>,
        steps: u64,
        trace: Vec<usize>,
    ) -> Result<Self, CombineError> {
        if member_ids.is_empty() {
            return Err(CombineError::EmptyPortfolio);
        }
        if steps == 0 {
            return Err(CombineError::NonPositiveSteps);
        }
        if counts.len() != member_ids.len() || counts.iter().sum::<u64>() != steps {
            return Err(CombineError::MemberMismatch);
        }
        let weights = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        Ok(Self {
            member_ids,
            weights,
            counts: Some(counts),
            trace,
            steps,
        })
    }

    /// Real-valued simplex weights (used by performance weighting).
    pub fn from_weights(member_ids: Vec<String>, weights: Vec<f64>) -> Result<Self, CombineError> {
        if member_ids.is_empty() {
            return Err(CombineError::EmptyPortfolio);
        }
        if weights.len() != member_ids.len()
            || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(CombineError::MemberMismatch);
        }
        Ok(Self {
            member_ids,
            weights,
            counts: None,
            trace: Vec::new(),
            steps: 1,
        })
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integer selection counts, when the weights are count-based.
    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// Selected member index per greedy step, in step order.
    pub fn trace(&self) -> &[usize] {
        &self.trace
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Number of members carrying nonzero weight.
    pub fn active_members(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// Outcome of validation-based model selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_member_id: String,
    /// Validation loss per member, in declaration order.
    pub validation_losses: Vec<(String, f64)>,
}

impl SelectionResult {
    pub fn chosen_loss(&self) -> f64 {
        self.validation_losses
            .iter()
            .find(|(id, _)| *id == self.chosen_member_id)
            .map(|(_, loss)| *loss)
            .unwrap_or(f64::NAN)
    }
}

/// Picks the member with the lowest validation loss; ties go to the
/// earliest declared member.
pub fn select_best(
    members: &[(String, QuantileForecast)],
    scorer: &WindowScorer,
) -> Result<SelectionResult, CombineError> {
    if members.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    let mut losses = Vec::with_capacity(members.len());
    let mut best: Option<(usize, f64)> = None;
    for (idx, (id, forecast)) in members.iter().enumerate() {
        let loss = scorer.score(forecast)?;
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((idx, loss));
        }
        losses.push((id.clone(), loss));
    }
    let (chosen, _) = best.expect("nonempty members");
    Ok(SelectionResult {
        chosen_member_id: members[chosen].0.clone(),
        validation_losses: losses,
    })
}

/// Greedy ensemble selection over the validation window, returning the
/// final-step weights.
///
/// Candidate losses are evaluated on an incrementally updated running sum of
/// the selected planes, so each step costs one pass per member rather than a
/// recombination from scratch; exactness is preserved because the candidate
/// plane is always `(running_sum + member) / j`.
pub fn greedy_ensemble_selection(
    members: &[(String, QuantileForecast)],
    scorer: &WindowScorer,
    steps: u64,
) -> Result<EnsembleWeights, CombineError> {
    greedy_ensemble_selection_opts(members, scorer, steps, false)
}

/// Greedy selection with the classic variant selectable: with
/// `best_iteration` the weights from the lowest-loss step are returned
/// instead of the final-step weights. Off by default.
pub fn greedy_ensemble_selection_opts(
    members: &[(String, QuantileForecast)],
    scorer: &WindowScorer,
    steps: u64,
    best_iteration: bool,
) -> Result<EnsembleWeights, CombineError> {
    if members.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    if steps == 0 {
        return Err(CombineError::NonPositiveSteps);
    }
    let planes: Vec<Vec<f64>> = members
        .iter()
        .map(|(_, f)| scorer.plane(f))
        .collect::<Result<_, _>>()?;
    let plane_len = planes[0].len();
    if planes.iter().any(|p| p.len() != plane_len) {
        return Err(CombineError::ShapeMismatch);
    }

    let mut running_sum = vec![0.0f64; plane_len];
    let mut counts = vec![0u64; members.len()];
    let mut trace = Vec::with_capacity(steps as usize);
    let mut best_snapshot: Option<(f64, Vec<u64>, u64)> = None;
    for j in 1..=steps {
        let div = j as f64;
        let mut best_idx = 0usize;
        let mut best_loss = f64::INFINITY;
        for (idx, plane) in planes.iter().enumerate() {
            let loss = scorer.score_scaled_sum(Some(&running_sum), plane, div);
            if loss < best_loss {
                best_loss = loss;
                best_idx = idx;
            }
        }
        counts[best_idx] += 1;
        trace.push(best_idx);
        for (acc, v) in running_sum.iter_mut().zip(&planes[best_idx]) {
            *acc += v;
        }
        if best_iteration
            && best_snapshot
                .as_ref()
                .is_none_or(|(loss, _, _)| best_loss < *loss)
        {
            best_snapshot = Some((best_loss, counts.clone(), j));
        }
    }
    let member_ids: Vec<String> = members.iter().map(|(id, _)| id.clone()).collect();
    match best_snapshot {
        Some((_, best_counts, at_step)) if best_iteration => {
            trace.truncate(at_step as usize);
            EnsembleWeights::from_counts(member_ids, best_counts, at_step, trace)
        }
        _ => EnsembleWeights::from_counts(member_ids, counts, steps, trace),
    }
}

/// Elementwise weighted average of member tensors.
pub fn combine_forecasts(
    weights: &EnsembleWeights,
    members: &[(String, QuantileForecast)],
) -> Result<QuantileForecast, CombineError> {
    if members.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    if members.len() != weights.member_ids.len()
        || members
            .iter()
            .zip(&weights.member_ids)
            .any(|((id, _), wid)| id != wid)
    {
        return Err(CombineError::MemberMismatch);
    }
    let first = &members[0].1;
    for (_, f) in members {
        if f.n_items() != first.n_items()
            || f.horizon() != first.horizon()
            || f.quantile_levels() != first.quantile_levels()
            || f.item_ids() != first.item_ids()
        {
            return Err(CombineError::ShapeMismatch);
        }
    }
    let mut acc = vec![0.0f64; first.values().len()];
    match &weights.counts {
        Some(counts) => {
            for ((_, forecast), &count) in members.iter().zip(counts) {
                if count == 0 {
                    continue;
                }
                let c = count as f64;
                for (a, v) in acc.iter_mut().zip(forecast.values()) {
                    *a += c * v;
                }
            }
            let div = weights.steps as f64;
            for a in acc.iter_mut() {
                *a /= div;
            }
        }
        None => {
            for ((_, forecast), &w) in members.iter().zip(&weights.weights) {
                for (a, v) in acc.iter_mut().zip(forecast.values()) {
                    *a += w * v;
                }
            }
        }
    }
    QuantileForecast::new(
        first.item_ids().to_vec(),
        first.horizon(),
        first.quantile_levels().to_vec(),
        acc,
    )
    .map_err(|_| CombineError::ShapeMismatch)
}

/// Uniform weights `1/M`, represented as one count per member.
pub fn simple_average_weights(member_ids: &[String]) -> Result<EnsembleWeights, CombineError> {
    if member_ids.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    let n = member_ids.len() as u64;
    EnsembleWeights::from_counts(member_ids.to_vec(), vec![1; member_ids.len()], n, Vec::new())
}

/// Inverse-validation-loss weights, normalized to the simplex. Zero losses
/// are floored at [`SCALE_EPSILON`].
pub fn performance_weighted(
    validation_losses: &[(String, f64)],
) -> Result<EnsembleWeights, CombineError> {
    if validation_losses.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    let raw: Vec<f64> = validation_losses
        .iter()
        .map(|(_, loss)| 1.0 / loss.max(SCALE_EPSILON))
        .collect();
    let total: f64 = raw.iter().sum();
    EnsembleWeights::from_weights(
        validation_losses.iter().map(|(id, _)| id.clone()).collect(),
        raw.iter().map(|w| w / total).collect(),
    )
}
