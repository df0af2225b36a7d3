//! The four aggregation algorithms behind a common predict/update interface.
//!
//! Standard-setting learners ([`MlProd`], [`AdaptMlProd`], [`MlPoly`])
//! implement [`Learner`]. Learners that consume per-round confidences
//! ([`MlcHedge`] and the reduction in [`crate::confidence`]) implement
//! [`ConfidenceLearner`].
//!
//! Every learner with `K = 1` plays the point mass on its only expert.

mod adapt_ml_prod;
mod ml_poly;
mod ml_prod;
mod mlc_hedge;

pub use adapt_ml_prod::{AdaptMlProd, AdaptBoundTerms};
pub use ml_poly::MlPoly;
pub use ml_prod::MlProd;
pub use mlc_hedge::MlcHedge;

use crate::error::Result;
use crate::ledger::RegretLedger;
use crate::types::{ConfidenceVector, LossVector, MixtureVector, RoundOutcome};

/// A learner for the standard expert-advice setting.
///
/// `predict` is pure; `update` plays the mixture `predict` would return,
/// observes the losses, advances the state by one round and records the
/// outcome in the learner's ledger.
pub trait Learner: Send + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn expert_count(&self) -> usize;

    fn predict(&self) -> MixtureVector;

    fn update(&mut self, losses: &LossVector) -> Result<RoundOutcome>;

    fn ledger(&self) -> &RegretLedger;
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn expert_count(&self) -> usize {
        (**self).expert_count()
    }

    fn predict(&self) -> MixtureVector {
        (**self).predict()
    }

    fn update(&mut self, losses: &LossVector) -> Result<RoundOutcome> {
        (**self).update(losses)
    }

    fn ledger(&self) -> &RegretLedger {
        (**self).ledger()
    }
}

/// A learner for experts that report confidences.
pub trait ConfidenceLearner: Send + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn expert_count(&self) -> usize;

    /// Mixture supported on the active set of `confidences`.
    fn predict(&mut self, confidences: &ConfidenceVector) -> Result<MixtureVector>;

    fn update(
        &mut self,
        losses: &LossVector,
        confidences: &ConfidenceVector,
    ) -> Result<RoundOutcome>;

    /// Ledger of the learner's regret on the original losses, including
    /// confidence regret.
    fn ledger(&self) -> &RegretLedger;

    /// Predict then update in one call.
    fn step(
        &mut self,
        losses: &LossVector,
        confidences: &ConfidenceVector,
    ) -> Result<RoundOutcome> {
        self.predict(confidences)?;
        self.update(losses, confidences)
    }
}

/// Mixture proportional to `scale_k · exp(log_weight_k)`, computed with a
/// max shift so that tiny weights do not underflow to an all-zero vector.
pub(crate) fn mixture_from_log_weights(scales: &[f64], log_weights: &[f64]) -> Option<MixtureVector> {
    let shift = scales
        .iter()
        .zip(log_weights)
        .filter(|(s, _)| **s > 0.0)
        .map(|(_, lw)| *lw)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let scores = scales
        .iter()
        .zip(log_weights)
        .map(|(&s, &lw)| if s > 0.0 { s * (lw - shift).exp() } else { 0.0 })
        .collect();
    MixtureVector::from_scores(scores)
}
