use super::Learner;
use crate::error::{AggError, Result};
use crate::ledger::RegretLedger;
use crate::types::{check_len, LearnerConfig, LossVector, MixtureVector, RoundOutcome};

/// Polynomially weighted averages (order two) with one rate per expert.
///
/// Plays `p_k ∝ η_{k,t-1} (R_{k,t-1})_+` with
/// `η_{k,t} = 1 / (1 + Σ_{s≤t} r_{k,s}²)`. When every regret is nonpositive
/// the normalizer vanishes and the uniform mixture is played instead.
#[derive(Debug, Clone)]
pub struct MlPoly {
    regrets: Vec<f64>,
    cumulative_sq: Vec<f64>,
    rates: Vec<f64>,
    ledger: RegretLedger,
}

impl MlPoly {
    pub fn new(config: &LearnerConfig) -> Result<Self> {
        if config.expert_count == 0 {
            return Err(AggError::NoExperts);
        }
        if config.fixed_rates.is_some() || config.initial_weights.is_some() {
            return Err(AggError::ConfigMismatch(
                "ml_poly takes neither fixed rates nor prior weights".into(),
            ));
        }
        let k = config.expert_count;
        Ok(Self {
            regrets: vec![0.0; k],
            cumulative_sq: vec![1.0; k],
            rates: vec![1.0; k],
            ledger: RegretLedger::new(k),
        })
    }

    /// Builds a state mid-run, for inspecting the mixture rule directly.
    pub fn from_state(regrets: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        check_len(regrets.len(), rates.len())?;
        if let Some((index, &rate)) = rates.iter().enumerate().find(|(_, r)| !(**r > 0.0 && **r <= 1.0)) {
            return Err(AggError::RateOutOfRange {
                index,
                rate,
                max: 1.0,
            });
        }
        let k = regrets.len();
        Ok(Self {
            cumulative_sq: rates.iter().map(|r| 1.0 / r).collect(),
            regrets,
            rates,
            ledger: RegretLedger::new(k),
        })
    }

    pub fn regrets(&self) -> &[f64] {
        &self.regrets
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `‖(R_t)_+‖²_{D_t} = Σ_k η_{k,t} (R_{k,t})_+²`.
    pub fn potential(&self) -> f64 {
        self.rates
            .iter()
            .zip(&self.regrets)
            .map(|(eta, r)| eta * r.max(0.0).powi(2))
            .sum()
    }
}

impl Learner for MlPoly {
    fn name(&self) -> &'static str {
        "ml_poly"
    }

    fn expert_count(&self) -> usize {
        self.regrets.len()
    }

    fn predict(&self) -> MixtureVector {
        let k = self.expert_count();
        if k == 1 {
            return MixtureVector::point_mass(1, 0);
        }
        let scores = self
            .rates
            .iter()
            .zip(&self.regrets)
            .map(|(eta, r)| eta * r.max(0.0))
            .collect();
        MixtureVector::from_scores(scores).unwrap_or_else(|| MixtureVector::uniform(k))
    }

    fn update(&mut self, losses: &LossVector) -> Result<RoundOutcome> {
        check_len(self.expert_count(), losses.len())?;
        let outcome = RoundOutcome::new(self.predict(), losses.values());
        for (i, &r) in outcome.instantaneous_regrets.iter().enumerate() {
            self.regrets[i] += r;
            self.cumulative_sq[i] += r * r;
            self.rates[i] = 1.0 / self.cumulative_sq[i];
        }
        self.ledger.record(&outcome, losses)?;
        Ok(outcome)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_start_is_uniform() {
        let l = MlPoly::new(&LearnerConfig::uniform(4)).unwrap();
        assert_eq!(l.predict().weights(), &[0.25; 4]);
    }

    #[test]
    fn negative_regrets_are_clipped() {
        let l = MlPoly::from_state(vec![2.0, -1.0], vec![0.5, 1.0]).unwrap();
        assert_eq!(l.predict().weights(), &[1.0, 0.0]);
    }

    #[test]
    fn regrets_match_ledger_exactly() {
        let mut l = MlPoly::new(&LearnerConfig::uniform(3)).unwrap();
        for t in 0..100 {
            let x = t as f64;
            let losses = vec![(x * 0.31).fract(), (x * 0.77).fract(), (x * 0.13).fract()];
            l.update(&LossVector::new(losses).unwrap()).unwrap();
        }
        assert_eq!(l.regrets(), l.ledger().cumulative_regret.as_slice());
        for (eta, s) in l.rates().iter().zip(&l.ledger().squared_excess) {
            assert!((eta - 1.0 / (1.0 + s)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_fixed_rates() {
        let cfg = LearnerConfig::uniform(2).with_constant_rate(0.5);
        assert!(matches!(MlPoly::new(&cfg), Err(AggError::ConfigMismatch(_))));
    }
}
