//! Running regret statistics for one learner.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{check_len, ConfidenceVector, LossVector, RoundOutcome};

/// Per-expert cumulative regret statistics, all in rescaled `[0, 1]` units
/// unless the field name says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    /// `R_{k,T} = Σ_t r_{k,t}`.
    pub cumulative_regret: Vec<f64>,
    /// `Σ_t r_{k,t}²`.
    pub squared_excess: Vec<f64>,
    /// `R⁺_{k,T}`: regret accumulated on rounds where `ℓ_{k,t} ≤ ĥℓ_t`.
    pub positive_part: Vec<f64>,
    /// `R⁻_{k,T}`: excess loss accumulated on rounds where `ℓ_{k,t} ≥ ĥℓ_t`.
    pub negative_part: Vec<f64>,
    /// `R^c_{k,T} = Σ_t I_{k,t} r_{k,t}`.
    pub confidence_regret: Vec<f64>,
    /// `Σ_t I_{k,t}² r_{k,t}²`.
    pub confidence_squared_excess: Vec<f64>,
    /// `Σ_t I_{k,t} ℓ_{k,t}`.
    pub weighted_loss: Vec<f64>,
    /// `Σ_t ℓ_{k,t}`.
    pub expert_loss: Vec<f64>,
    /// `Σ_t ĥℓ_t`.
    pub learner_loss: f64,
    /// Regret in the losses' original units (`r · (b - a)` per round).
    pub cumulative_regret_original: Vec<f64>,
    /// Confidence regret in original units.
    pub confidence_regret_original: Vec<f64>,
    pub round_count: u64,
}

impl RegretLedger {
    pub fn new(k: usize) -> Self {
        Self {
            cumulative_regret: vec![0.0; k],
            squared_excess: vec![0.0; k],
            positive_part: vec![0.0; k],
            negative_part: vec![0.0; k],
            confidence_regret: vec![0.0; k],
            confidence_squared_excess: vec![0.0; k],
            weighted_loss: vec![0.0; k],
            expert_loss: vec![0.0; k],
            learner_loss: 0.0,
            cumulative_regret_original: vec![0.0; k],
            confidence_regret_original: vec![0.0; k],
            round_count: 0,
        }
    }

    pub fn expert_count(&self) -> usize {
        self.cumulative_regret.len()
    }

    /// Records a standard-setting round (every confidence equal to one).
    pub fn record(&mut self, outcome: &RoundOutcome, losses: &LossVector) -> Result<()> {
        self.record_inner(outcome, losses, None)
    }

    /// Records a round where expert `k` reported confidence `I_{k,t}`.
    pub fn record_with_confidence(
        &mut self,
        outcome: &RoundOutcome,
        losses: &LossVector,
        confidences: &ConfidenceVector,
    ) -> Result<()> {
        self.record_inner(outcome, losses, Some(confidences))
    }

    fn record_inner(
        &mut self,
        outcome: &RoundOutcome,
        losses: &LossVector,
        confidences: Option<&ConfidenceVector>,
    ) -> Result<()> {
        let k = self.expert_count();
        check_len(k, losses.len())?;
        check_len(k, outcome.instantaneous_regrets.len())?;
        if let Some(c) = confidences {
            check_len(k, c.len())?;
        }
        let scale = losses.scale();
        self.learner_loss += outcome.aggregate_loss;
        for (i, (&r, &l)) in outcome
            .instantaneous_regrets
            .iter()
            .zip(losses.values())
            .enumerate()
        {
            let conf = confidences.map_or(1.0, |c| c.values()[i]);
            self.cumulative_regret[i] += r;
            self.squared_excess[i] += r * r;
            if r >= 0.0 {
                self.positive_part[i] += r;
            } else {
                self.negative_part[i] -= r;
            }
            self.confidence_regret[i] += conf * r;
            self.confidence_squared_excess[i] += (conf * r) * (conf * r);
            self.weighted_loss[i] += conf * l;
            self.expert_loss[i] += l;
            self.cumulative_regret_original[i] += r * scale;
            self.confidence_regret_original[i] += conf * r * scale;
        }
        self.round_count += 1;
        Ok(())
    }

    /// Best expert in hindsight by cumulative loss; ties go to the lowest index.
    pub fn best_expert(&self) -> usize {
        argmin(&self.expert_loss)
    }

    /// Largest regret and the expert achieving it; ties go to the lowest index.
    pub fn max_regret(&self) -> (usize, f64) {
        let mut best = 0;
        for (i, &r) in self.cumulative_regret.iter().enumerate() {
            if r > self.cumulative_regret[best] {
                best = i;
            }
        }
        (best, self.cumulative_regret[best])
    }
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
