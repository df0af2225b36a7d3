use super::{mixture_from_log_weights, ConfidenceLearner};
use crate::error::{AggError, Result};
use crate::ledger::RegretLedger;
use crate::types::{
    check_len, ConfidenceVector, LearnerConfig, LossVector, MixtureVector, RoundOutcome,
};

/// Hedge with one fixed rate per expert, for experts reporting confidences.
///
/// Plays `p_k ∝ I_k (1 - e^{-η_k}) w_k` and updates
/// `w_k ← w_k exp(η_k I_k (e^{-η_k} ĥℓ - ℓ_k))`. The total weight only
/// decreases, so the weights live in the log domain.
#[derive(Debug, Clone)]
pub struct MlcHedge {
    rates: Vec<f64>,
    log_weights: Vec<f64>,
    ledger: RegretLedger,
}

impl MlcHedge {
    pub const MAX_RATE: f64 = 1.0;
    pub const DEFAULT_RATE: f64 = 0.5;

    pub fn new(config: &LearnerConfig) -> Result<Self> {
        config.validate(Self::MAX_RATE)?;
        let priors = config.priors()?;
        Ok(Self {
            rates: config.rates_or(Self::DEFAULT_RATE),
            log_weights: priors.iter().map(|w| w.ln()).collect(),
            ledger: RegretLedger::new(priors.len()),
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    fn mixture(&self, confidences: &ConfidenceVector) -> Result<MixtureVector> {
        let k = self.rates.len();
        check_len(k, confidences.len())?;
        if k == 1 {
            return Ok(MixtureVector::point_mass(1, 0));
        }
        let scales: Vec<f64> = self
            .rates
            .iter()
            .zip(confidences.values())
            .map(|(eta, i)| i * -(-eta).exp_m1())
            .collect();
        mixture_from_log_weights(&scales, &self.log_weights).ok_or(AggError::EmptyActiveSet)
    }
}

impl ConfidenceLearner for MlcHedge {
    fn name(&self) -> &'static str {
        "mlc_hedge"
    }

    fn expert_count(&self) -> usize {
        self.rates.len()
    }

    fn predict(&mut self, confidences: &ConfidenceVector) -> Result<MixtureVector> {
        self.mixture(confidences)
    }

    fn update(
        &mut self,
        losses: &LossVector,
        confidences: &ConfidenceVector,
    ) -> Result<RoundOutcome> {
        check_len(self.rates.len(), losses.len())?;
        let outcome = RoundOutcome::new(self.mixture(confidences)?, losses.values());
        let agg = outcome.aggregate_loss;
        for (((lw, &eta), &conf), &loss) in self
            .log_weights
            .iter_mut()
            .zip(&self.rates)
            .zip(confidences.values())
            .zip(losses.values())
        {
            *lw += eta * conf * ((-eta).exp() * agg - loss);
        }
        self.ledger
            .record_with_confidence(&outcome, losses, confidences)?;
        Ok(outcome)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }
}
