//! Per-round inputs and outputs shared by every learner.

use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};

/// Tolerance for "sums to one" checks on mixtures and priors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// One round of expert losses, rescaled into `[0, 1]`.
///
/// The raw values and the range `(a, b)` they were declared in are kept so
/// that regrets can be reported in original units and files round-trip
/// exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossVector {
    values: Vec<f64>,
    raw: Vec<f64>,
    original_range: (f64, f64),
}

impl LossVector {
    /// Losses already in the canonical range `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::from_raw(values, (0.0, 1.0))
    }

    /// Losses declared in `[a, b]`, mapped affinely onto `[0, 1]`.
    pub fn from_raw(raw: Vec<f64>, range: (f64, f64)) -> Result<Self> {
        let (a, b) = range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(AggError::InvalidRange { a, b });
        }
        if raw.is_empty() {
            return Err(AggError::NoExperts);
        }
        let width = b - a;
        let identity = a == 0.0 && b == 1.0;
        let mut values = Vec::with_capacity(raw.len());
        for (index, &x) in raw.iter().enumerate() {
            let v = if identity { x } else { (x - a) / width };
            if !(0.0..=1.0).contains(&v) {
                return Err(AggError::LossOutOfRange { index, value: v });
            }
            values.push(v);
        }
        Ok(Self {
            values,
            raw,
            original_range: range,
        })
    }

    /// Caller guarantees `values` are the clamped rescaling of `raw`.
    pub(crate) fn from_parts(values: Vec<f64>, raw: Vec<f64>, original_range: (f64, f64)) -> Self {
        Self {
            values,
            raw,
            original_range,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Losses as supplied, before rescaling.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn original_range(&self) -> (f64, f64) {
        self.original_range
    }

    /// `b - a`; multiplies rescaled regrets back into original units.
    pub fn scale(&self) -> f64 {
        self.original_range.1 - self.original_range.0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-expert confidences `I_{k,t}` in `[0, 1]` with a nonempty active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector {
    values: Vec<f64>,
}

impl ConfidenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(AggError::NoExperts);
        }
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(AggError::ConfidenceOutOfRange { index, value });
            }
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(AggError::EmptyActiveSet);
        }
        Ok(Self { values })
    }

    /// Every expert fully confident; reduces to the standard setting.
    pub fn ones(k: usize) -> Self {
        Self {
            values: vec![1.0; k],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.values[k] > 0.0
    }

    /// Indices of experts with strictly positive confidence.
    pub fn active_set(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&k| self.is_active(k)).collect()
    }
}

/// A probability vector over experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureVector {
    weights: Vec<f64>,
}

impl MixtureVector {
    /// Validates nonnegativity and unit sum (within [`SIMPLEX_TOL`]).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(AggError::NoExperts);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(AggError::InvalidMixture(format!("entry {w} is not a nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(AggError::InvalidMixture(format!("entries sum to {total}")));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative scores. Returns `None` when the scores sum to zero
    /// (or are not finite) so the caller can apply its own convention.
    pub fn from_scores(scores: Vec<f64>) -> Option<Self> {
        let total: f64 = scores.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return None;
        }
        Some(Self {
            weights: scores.into_iter().map(|s| s / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, index: usize) -> Self {
        let mut weights = vec![0.0; k];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// What happened in one round: the mixture played, the learner's loss
/// `p·ℓ`, and the instantaneous regrets `r_k = p·ℓ - ℓ_k`.
///
/// Regrets are accumulated as `Σ_j p_j (ℓ_j - ℓ_k)`, which is exactly zero
/// when all losses agree and does not depend on a common shift of the losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub mixture: MixtureVector,
    pub aggregate_loss: f64,
    pub instantaneous_regrets: Vec<f64>,
}

impl RoundOutcome {
    pub fn new(mixture: MixtureVector, losses: &[f64]) -> Self {
        let aggregate_loss = mixture.dot(losses);
        let instantaneous_regrets = losses
            .iter()
            .map(|lk| {
                mixture
                    .weights()
                    .iter()
                    .zip(losses)
                    .map(|(p, lj)| p * (lj - lk))
                    .sum()
            })
            .collect();
        Self {
            mixture,
            aggregate_loss,
            instantaneous_regrets,
        }
    }
}

/// Construction parameters common to the learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub expert_count: usize,
    /// Prior weights `w_0`; uniform when `None`.
    pub initial_weights: Option<Vec<f64>>,
    /// Per-expert fixed learning rates for ML-Prod and MLC-Hedge.
    pub fixed_rates: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

impl LearnerConfig {
    pub fn uniform(expert_count: usize) -> Self {
        Self {
            expert_count,
            initial_weights: None,
            fixed_rates: None,
            seed: None,
        }
    }

    pub fn with_rates(mut self, rates: Vec<f64>) -> Self {
        self.fixed_rates = Some(rates);
        self
    }

    pub fn with_constant_rate(self, rate: f64) -> Self {
        let k = self.expert_count;
        self.with_rates(vec![rate; k])
    }

    pub fn with_initial_weights(mut self, weights: Vec<f64>) -> Self {
        self.initial_weights = Some(weights);
        self
    }

    /// Checks the prior and, if present, that every rate lies in `(0, max_rate]`.
    pub fn validate(&self, max_rate: f64) -> Result<()> {
        if self.expert_count == 0 {
            return Err(AggError::NoExperts);
        }
        self.priors()?;
        if let Some(rates) = &self.fixed_rates {
            check_rates(rates, self.expert_count, max_rate)?;
        }
        Ok(())
    }

    /// The prior `w_0`, validated: positive entries summing to one.
    pub fn priors(&self) -> Result<Vec<f64>> {
        let k = self.expert_count;
        match &self.initial_weights {
            None => Ok(vec![1.0 / k as f64; k]),
            Some(w) => {
                if w.len() != k {
                    return Err(AggError::DimensionMismatch {
                        expected: k,
                        found: w.len(),
                    });
                }
                if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(AggError::InvalidWeights(
                        "every prior weight must be strictly positive".into(),
                    ));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > SIMPLEX_TOL {
                    return Err(AggError::InvalidWeights(format!("prior sums to {total}")));
                }
                Ok(w.clone())
            }
        }
    }

    /// Fixed rates, or `default` for every expert.
    pub fn rates_or(&self, default: f64) -> Vec<f64> {
        self.fixed_rates
            .clone()
            .unwrap_or_else(|| vec![default; self.expert_count])
    }
}

pub(crate) fn check_rates(rates: &[f64], k: usize, max_rate: f64) -> Result<()> {
    if rates.len() != k {
        return Err(AggError::DimensionMismatch {
            expected: k,
            found: rates.len(),
        });
    }
    for (index, &rate) in rates.iter().enumerate() {
        if !(rate > 0.0 && rate <= max_rate) {
            return Err(AggError::RateOutOfRange {
                index,
                rate,
                max: max_rate,
            });
        }
    }
    Ok(())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(AggError::DimensionMismatch { expected, found })
    }
}
