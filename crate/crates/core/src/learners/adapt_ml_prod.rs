use serde::{Deserialize, Serialize};

use super::{mixture_from_log_weights, Learner};
use crate::error::{AggError, Result};
use crate::ledger::RegretLedger;
use crate::types::{check_len, LearnerConfig, LossVector, MixtureVector, RoundOutcome};

/// Prod with one adaptive learning rate per expert.
///
/// Rates follow `η_{k,t} = min{1/2, √(γ_k / (1 + Σ_{s≤t} r_{k,s}²))}` with
/// `γ_k = ln(1/w_{k,0})` (`ln K` under the uniform prior). After each round
/// the weight of expert `k` becomes
/// `(w_{k,t-1}(1 + η_{k,t-1} r_{k,t}))^{η_{k,t}/η_{k,t-1}}`.
///
/// The state also tracks the quantities needed to check the proof-level
/// potential `W_t ≤ 1 + (1/e) Σ_{k,s≤t} (η_{k,s-1}/η_{k,s} - 1)`.
#[derive(Debug, Clone)]
pub struct AdaptMlProd {
    priors: Vec<f64>,
    gammas: Vec<f64>,
    log_weights: Vec<f64>,
    rates: Vec<f64>,
    initial_rates: Vec<f64>,
    /// `1 + Σ_{s≤t} r_{k,s}²`
    cumulative_sq: Vec<f64>,
    /// `Σ_{s≤t} η_{k,s-1} r_{k,s}²`
    rate_weighted_sq: Vec<f64>,
    rate_ratio_excess: f64,
    ledger: RegretLedger,
}

/// Per-expert ingredients of the general nonincreasing-rate bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptBoundTerms {
    pub priors: Vec<f64>,
    pub initial_rates: Vec<f64>,
    pub final_rates: Vec<f64>,
    pub rate_weighted_sq: Vec<f64>,
    /// `Σ_{k,t} (η_{k,t-1}/η_{k,t} - 1)`
    pub rate_ratio_excess: f64,
}

impl AdaptMlProd {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        config.validate(f64::INFINITY)?;
        if config.fixed_rates.is_some() {
            return Err(AggError::ConfigMismatch(
                "adapt_ml_prod tunes its own rates; fixed_rates must be unset".into(),
            ));
        }
        let priors = config.priors()?;
        let k = priors.len();
        let gammas: Vec<f64> = if k == 1 {
            vec![0.0]
        } else {
            priors.iter().map(|w| -w.ln()).collect()
        };
        let cumulative_sq = vec![1.0; k];
        let rates: Vec<f64> = gammas
            .iter()
            .zip(&cumulative_sq)
            .map(|(&g, &s)| rate_rule(g, s))
            .collect();
        Ok(Self {
            log_weights: priors.iter().map(|w| w.ln()).collect(),
            priors,
            initial_rates: rates.clone(),
            rates,
            gammas,
            cumulative_sq,
            rate_weighted_sq: vec![0.0; k],
            rate_ratio_excess: 0.0,
            ledger: RegretLedger::new(k),
        })
    }

    /// Current rates `η_{k,t}`, used for the next round's mixture.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `1 + Σ_{s≤t} r_{k,s}²` per expert.
    pub fn cumulative_sq(&self) -> &[f64] {
        &self.cumulative_sq
    }

    /// `W_t = Σ_k w_{k,t}`.
    pub fn total_weight(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Right-hand side of the weight-potential inequality at the current round.
    pub fn potential_ceiling(&self) -> f64 {
        1.0 + self.rate_ratio_excess / std::f64::consts::E
    }

    pub fn bound_terms(&self) -> AdaptBoundTerms {
        AdaptBoundTerms {
            priors: self.priors.clone(),
            initial_rates: self.initial_rates.clone(),
            final_rates: self.rates.clone(),
            rate_weighted_sq: self.rate_weighted_sq.clone(),
            rate_ratio_excess: self.rate_ratio_excess,
        }
    }
}

fn rate_rule(gamma: f64, cumulative_sq: f64) -> f64 {
    if gamma <= 0.0 {
        // single expert: ln K = 0, the rate is never used
        return 0.5;
    }
    (gamma / cumulative_sq).sqrt().min(0.5)
}

impl Learner for AdaptMlProd {
    fn name(&self) -> &'static str {
        "adapt_ml_prod"
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
        for (i, &r) in outcome.instantaneous_regrets.iter().enumerate() {
            let prev = self.rates[i];
            self.cumulative_sq[i] += r * r;
            self.rate_weighted_sq[i] += prev * r * r;
            let next = rate_rule(self.gammas[i], self.cumulative_sq[i]);
            self.rate_ratio_excess += prev / next - 1.0;
            self.log_weights[i] = (next / prev) * (self.log_weights[i] + (prev * r).ln_1p());
            self.rates[i] = next;
        }
        self.ledger.record(&outcome, losses)?;
        Ok(outcome)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }
}
