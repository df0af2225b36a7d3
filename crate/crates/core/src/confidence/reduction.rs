use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};
use crate::learners::{ConfidenceLearner, Learner};
use crate::ledger::RegretLedger;
use crate::types::{check_len, ConfidenceVector, LossVector, MixtureVector, RoundOutcome};

/// Runs a standard-setting learner on experts that report confidences.
///
/// At predict time the inner mixture `p̃` is reweighted by the confidences,
/// `p_k ∝ I_k p̃_k`, and renormalized over the active set. After the losses
/// arrive the inner learner is fed the modified losses
/// `ℓ̃_k = I_k ℓ_k + (1 - I_k) ĥℓ`, under which its standard regret on
/// expert `k` equals the confidence regret `Σ_t I_{k,t}(ĥℓ_t - ℓ_{k,t})`.
///
/// If `p̃` puts no mass on the active set the outer mixture falls back to
/// `p_k ∝ I_k`. The regret identity still holds in that case because every
/// expert the inner learner weights then receives `ℓ̃_k = ĥℓ`.
#[derive(Debug, Clone)]
pub struct Reduction<L> {
    inner: L,
    pending: Option<Pending>,
    last_round: Option<ReductionRound>,
    ledger: RegretLedger,
}

#[derive(Debug, Clone)]
struct Pending {
    confidences: ConfidenceVector,
    inner_mixture: MixtureVector,
    outer_mixture: MixtureVector,
}

/// Everything the reduction computed in its most recent round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRound {
    pub confidences: Vec<f64>,
    pub inner_mixture: MixtureVector,
    pub outer_mixture: MixtureVector,
    pub modified_losses: Vec<f64>,
    pub outcome: RoundOutcome,
    pub inner_outcome: RoundOutcome,
}

impl ReductionRound {
    /// `max_k |I_k(ĥℓ - ℓ_k) - (p̃·ℓ̃ - ℓ̃_k)|`; zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        let inner_loss = self.inner_mixture.dot(&self.modified_losses);
        self.confidences
            .iter()
            .zip(&self.outcome.instantaneous_regrets)
            .zip(&self.modified_losses)
            .map(|((i, r), m)| (i * r - (inner_loss - m)).abs())
            .fold(0.0, f64::max)
    }
}

impl<L: Learner> Reduction<L> {
    pub fn new(inner: L) -> Self {
        let k = inner.expert_count();
        Self {
            inner,
            pending: None,
            last_round: None,
            ledger: RegretLedger::new(k),
        }
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn into_inner(self) -> L {
        self.inner
    }

    pub fn last_round(&self) -> Option<&ReductionRound> {
        self.last_round.as_ref()
    }

    /// Mixture of the inner learner stored at the last predict, if any.
    pub fn pending_inner_mixture(&self) -> Option<&MixtureVector> {
        self.pending.as_ref().map(|p| &p.inner_mixture)
    }
}

impl<L: Learner> ConfidenceLearner for Reduction<L> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn expert_count(&self) -> usize {
        self.inner.expert_count()
    }

    fn predict(&mut self, confidences: &ConfidenceVector) -> Result<MixtureVector> {
        if self.pending.is_some() {
            return Err(AggError::StaleRound);
        }
        check_len(self.expert_count(), confidences.len())?;
        let inner_mixture = self.inner.predict();
        let outer_mixture = redistribute(&inner_mixture, confidences)?;
        self.pending = Some(Pending {
            confidences: confidences.clone(),
            inner_mixture,
            outer_mixture: outer_mixture.clone(),
        });
        Ok(outer_mixture)
    }

    fn update(
        &mut self,
        losses: &LossVector,
        confidences: &ConfidenceVector,
    ) -> Result<RoundOutcome> {
        check_len(self.expert_count(), losses.len())?;
        let pending = self.pending.as_ref().ok_or(AggError::MissingPrediction)?;
        if pending.confidences != *confidences {
            return Err(AggError::ConfidenceMismatch);
        }
        let outcome = RoundOutcome::new(pending.outer_mixture.clone(), losses.values());
        let agg = outcome.aggregate_loss;
        let modified: Vec<f64> = confidences
            .values()
            .iter()
            .zip(losses.values())
            .map(|(&i, &l)| (i * l + (1.0 - i) * agg).clamp(0.0, 1.0))
            .collect();
        let inner_outcome = self.inner.update(&LossVector::new(modified.clone())?)?;
        self.ledger
            .record_with_confidence(&outcome, losses, confidences)?;

        let pending = self.pending.take().expect("checked above");
        self.last_round = Some(ReductionRound {
            confidences: pending.confidences.values().to_vec(),
            inner_mixture: pending.inner_mixture,
            outer_mixture: pending.outer_mixture,
            modified_losses: modified,
            outcome: outcome.clone(),
            inner_outcome,
        });
        Ok(outcome)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }
}

/// `p_k = I_k p̃_k / Σ_j I_j p̃_j`, or `p_k ∝ I_k` when the denominator is zero.
/// Equal confidences return `p̃` unchanged.
pub fn redistribute(
    inner: &MixtureVector,
    confidences: &ConfidenceVector,
) -> Result<MixtureVector> {
    check_len(inner.len(), confidences.len())?;
    let c = confidences.values();
    if c.iter().all(|&x| x == c[0]) {
        // a common factor cancels; skip the rounding of a second normalization
        return Ok(inner.clone());
    }
    let scores = inner
        .weights()
        .iter()
        .zip(confidences.values())
        .map(|(p, i)| p * i)
        .collect();
    MixtureVector::from_scores(scores)
        .or_else(|| MixtureVector::from_scores(confidences.values().to_vec()))
        .ok_or(AggError::EmptyActiveSet)
}
