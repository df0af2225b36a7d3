//! Linearization of convex losses around the aggregated prediction.
//!
//! When experts predict points `x_k` in a convex set and the loss is a convex
//! differentiable `f`, the learner can be fed the linear pseudo-losses
//! `ℓ'_k = ∇f(x̂)·x_k` taken at its own aggregate `x̂ = Σ_k p_k x_k`. By
//! convexity, regret on the pseudo-losses dominates regret against every
//! fixed convex combination of the experts on the true losses.

use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};
use crate::types::{LossVector, MixtureVector};

/// A convex, differentiable loss over `R^d`.
pub trait ConvexLoss {
    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `f(x) = ‖x - target‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredLoss {
    pub target: Vec<f64>,
}

impl ConvexLoss for SquaredLoss {
    fn dimension(&self) -> usize {
        self.target.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.target).map(|(a, b)| 2.0 * (a - b)).collect()
    }
}

/// A loss that does not depend on the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantLoss {
    pub dimension: usize,
    pub value: f64,
}

impl ConvexLoss for ConstantLoss {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.dimension]
    }
}

/// Declared bounds used to map pseudo-losses into `[0, 1]`.
///
/// With `‖∇f‖ ≤ G` and `‖x - y‖ ≤ D` on the prediction set, every centered
/// pseudo-loss `∇f(x̂)·(x_k - x̂)` lies in `[-GD, GD]`. Pseudo-losses are
/// rescaled from `[c - GD, c + GD]` with `c = ∇f(x̂)·x̂`; the shift by `c`
/// cancels in every regret.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientTrick {
    pub gradient_bound: f64,
    pub diameter: f64,
}

/// Output of [`GradientTrick::linearize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Linearized {
    pub gradient: Vec<f64>,
    /// `∇f(x̂)·x_k` before rescaling.
    pub raw: Vec<f64>,
    /// Rescaled pseudo-losses; `original_range()` records the map back.
    pub losses: LossVector,
}

impl GradientTrick {
    pub fn new(gradient_bound: f64, diameter: f64) -> Result<Self> {
        if !(gradient_bound > 0.0 && gradient_bound.is_finite()) {
            return Err(AggError::DomainError(format!(
                "gradient bound must be positive, got {gradient_bound}"
            )));
        }
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(AggError::DomainError(format!(
                "diameter must be positive, got {diameter}"
            )));
        }
        Ok(Self {
            gradient_bound,
            diameter,
        })
    }

    /// Width `b - a = 2GD` of the declared pseudo-loss range.
    pub fn scale(&self) -> f64 {
        2.0 * self.gradient_bound * self.diameter
    }

    pub fn linearize<F: ConvexLoss + ?Sized>(
        &self,
        loss: &F,
        expert_points: &[Vec<f64>],
        aggregate: &[f64],
    ) -> Result<Linearized> {
        let d = loss.dimension();
        check_dimension(d, aggregate)?;
        for x in expert_points {
            check_dimension(d, x)?;
        }
        if expert_points.is_empty() {
            return Err(AggError::NoExperts);
        }
        let gradient = loss.gradient(aggregate);
        let center = dot(&gradient, aggregate);
        let half_width = self.gradient_bound * self.diameter;
        let (low, high) = (center - half_width, center + half_width);
        let slack = 1e-12 * half_width.max(center.abs());
        let raw: Vec<f64> = expert_points.iter().map(|x| dot(&gradient, x)).collect();
        let mut values = Vec::with_capacity(raw.len());
        for (index, &value) in raw.iter().enumerate() {
            if !(value >= low - slack && value <= high + slack) {
                return Err(AggError::GradientBoundViolated {
                    index,
                    value,
                    low,
                    high,
                });
            }
            values.push(((value - low) / (2.0 * half_width)).clamp(0.0, 1.0));
        }
        let losses = LossVector::from_parts(values, raw.clone(), (low, high));
        Ok(Linearized {
            gradient,
            raw,
            losses,
        })
    }
}

/// `x̂ = Σ_k p_k x_k`.
pub fn aggregate_point(mixture: &MixtureVector, expert_points: &[Vec<f64>]) -> Vec<f64> {
    let d = expert_points.first().map_or(0, Vec::len);
    let mut out = vec![0.0; d];
    for (p, x) in mixture.weights().iter().zip(expert_points) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o += p * xi;
        }
    }
    out
}

/// Compares `gradient` with central differences of `value` at `x`.
///
/// Returns the largest per-coordinate discrepancy relative to
/// `max(1, |gradient_i|)`.
pub fn finite_difference_error<F: ConvexLoss + ?Sized>(loss: &F, x: &[f64], step: f64) -> f64 {
    let g = loss.gradient(x);
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = loss.value(&probe);
        probe[i] = x[i] - step;
        let down = loss.value(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * step);
        worst = worst.max((numeric - g[i]).abs() / g[i].abs().max(1.0));
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dimension(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(AggError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}
