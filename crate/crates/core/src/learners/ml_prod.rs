use super::{mixture_from_log_weights, Learner};
use crate::error::Result;
use crate::ledger::RegretLedger;
use crate::types::{check_len, check_rates, LearnerConfig, LossVector, MixtureVector, RoundOutcome};

/// Prod with one fixed learning rate per expert.
///
/// Plays `p_k ∝ η_k w_k` and updates `w_k ← w_k (1 + η_k r_k)`. Because
/// `Σ_k η_k w_k r_k = 0` under that mixture, the total weight stays at one.
/// Weights are held as logarithms so a long losing streak cannot underflow
/// an expert to exactly zero.
#[derive(Debug, Clone)]
pub struct MlProd {
    rates: Vec<f64>,
    log_weights: Vec<f64>,
    ledger: RegretLedger,
}

impl MlProd {
    pub const MAX_RATE: f64 = 0.5;

    /// Rates default to `1/2` for every expert when the config has none.
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        config.validate(Self::MAX_RATE)?;
        let rates = config.rates_or(Self::MAX_RATE);
        Ok(Self::build(config.priors()?, rates))
    }

    /// Skips the `η_k ≤ 1/2` check. Only rates below one keep the update
    /// factor positive; this exists to run negative controls for the bound
    /// checkers and must not be used otherwise.
    pub fn with_unchecked_rates(config: &LearnerConfig, rates: Vec<f64>) -> Result<Self> {
        let priors = config.priors()?;
        check_rates(&rates, config.expert_count, 1.0 - f64::EPSILON)?;
        Ok(Self::build(priors, rates))
    }

    fn build(priors: Vec<f64>, rates: Vec<f64>) -> Self {
        let k = priors.len();
        Self {
            rates,
            log_weights: priors.iter().map(|w| w.ln()).collect(),
            ledger: RegretLedger::new(k),
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `W_t = Σ_k w_{k,t}`.
    pub fn total_weight(&self) -> f64 {
        self.weights().iter().sum()
    }
}

impl Learner for MlProd {
    fn name(&self) -> &'static str {
        "ml_prod"
    }

    fn expert_count(&self) -> usize {
        self.rates.len()
    }

    fn predict(&self) -> MixtureVector {
        let k = self.expert_count();
        if k == 1 {
            return MixtureVector::point_mass(1, 0);
        }
        mixture_from_log_weights(&self.rates, &self.log_weights)
            .unwrap_or_else(|| MixtureVector::uniform(k))
    }

    fn update(&mut self, losses: &LossVector) -> Result<RoundOutcome> {
        check_len(self.expert_count(), losses.len())?;
        let outcome = RoundOutcome::new(self.predict(), losses.values());
        for ((lw, &eta), &r) in self
            .log_weights
            .iter_mut()
            .zip(&self.rates)
            .zip(&outcome.instantaneous_regrets)
        {
            *lw += (eta * r).ln_1p();
        }
        self.ledger.record(&outcome, losses)?;
        Ok(outcome)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }
}
