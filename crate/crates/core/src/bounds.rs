//! Closed-form regret bounds evaluated against a ledger.
//!
//! Every bound is in rescaled `[0, 1]` loss units. A report compares the
//! per-expert bound with the matching realized regret; an entry counts as
//! satisfied when `bound - realized ≥ -1e-9`.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};
use crate::learners::AdaptBoundTerms;
use crate::ledger::RegretLedger;
use crate::types::LearnerConfig;

pub const SATISFACTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    /// Fixed-rate ML-Prod.
    T1,
    /// Hindsight-optimal fixed rate.
    Eq5,
    /// Empirical variance of the excess losses.
    Eq6,
    /// Adapt-ML-Prod with an arbitrary nonincreasing rate rule.
    T2,
    /// Adapt-ML-Prod with the default rate rule.
    C3,
    /// ML-Poly.
    T4,
    /// Confidence regret through the reduction.
    C5,
    /// Small excess losses.
    #[serde(rename = "ISEL")]
    Isel,
    /// Constant regret under a stochastic gap.
    #[serde(rename = "IID")]
    Iid,
    /// MLC-Hedge.
    T7,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::T1,
        TheoremId::Eq5,
        TheoremId::Eq6,
        TheoremId::T2,
        TheoremId::C3,
        TheoremId::T4,
        TheoremId::C5,
        TheoremId::Isel,
        TheoremId::Iid,
        TheoremId::T7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T1 => "T1",
            TheoremId::Eq5 => "Eq5",
            TheoremId::Eq6 => "Eq6",
            TheoremId::T2 => "T2",
            TheoremId::C3 => "C3",
            TheoremId::T4 => "T4",
            TheoremId::C5 => "C5",
            TheoremId::Isel => "ISEL",
            TheoremId::Iid => "IID",
            TheoremId::T7 => "T7",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = AggError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AggError::InvalidSpec(format!("unknown theorem id `{s}`")))
    }
}

/// Whether a violated entry indicates a bug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// Holds for every loss sequence.
    Proved,
    /// Holds with probability at least `1 - δ` over the data.
    HighProbability,
    /// Reported for comparison only; not guaranteed for this learner.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub status: BoundStatus,
    /// Experts the entries below refer to, in order.
    pub experts: Vec<usize>,
    pub per_expert_bound: Vec<f64>,
    pub realized: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub slack: Vec<f64>,
}

impl BoundReport {
    pub fn new(theorem: TheoremId, status: BoundStatus, bound: Vec<f64>, realized: Vec<f64>) -> Self {
        let experts = (0..bound.len()).collect();
        Self::for_experts(theorem, status, experts, bound, realized)
    }

    pub fn for_experts(
        theorem: TheoremId,
        status: BoundStatus,
        experts: Vec<usize>,
        bound: Vec<f64>,
        realized: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(bound.len(), realized.len());
        let slack: Vec<f64> = bound.iter().zip(&realized).map(|(b, r)| b - r).collect();
        let satisfied = slack.iter().map(|&s| s >= -SATISFACTION_TOL).collect();
        Self {
            theorem,
            status,
            experts,
            per_expert_bound: bound,
            realized,
            satisfied,
            slack,
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    /// True when the report is proved and some entry is violated.
    pub fn is_violation(&self) -> bool {
        self.status == BoundStatus::Proved && !self.all_satisfied()
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Constants `(Ξ₁, Ξ₂)` of a bound `R_{k,T} ≤ Ξ₁√(ln K · Σ_t r_{k,t}²) + Ξ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi {
    pub xi1: f64,
    pub xi2: f64,
}

/// `ln(1 + (K/2e)(1 + ln(T + 1)))`.
pub fn b_kt(k: usize, t: u64) -> f64 {
    (k as f64 / (2.0 * E) * (1.0 + (t as f64).ln_1p())).ln_1p()
}

/// `C_{K,T} = 3 ln K + ln(1 + (K/2e)(1 + ln(T + 1)))`.
pub fn c_kt(k: usize, t: u64) -> f64 {
    3.0 * (k as f64).ln() + b_kt(k, t)
}

/// Constants for Adapt-ML-Prod under uniform priors.
///
/// From `√(1 + V) ≤ 1 + √V`, the default-rule bound
/// `(C/√ln K)√(1 + V) + 2C` is at most
/// `(C/ln K)·√(ln K · V) + (2C + C/√ln K)`.
pub fn xi_adapt_ml_prod(k: usize, t: u64) -> Result<Xi> {
    if k < 2 {
        return Err(AggError::DegenerateK);
    }
    let c = c_kt(k, t);
    let ln_k = (k as f64).ln();
    Ok(Xi {
        xi1: c / ln_k,
        xi2: 2.0 * c + c / ln_k.sqrt(),
    })
}

/// Constants for ML-Poly: with `A = K(1 + ln(1 + T))`,
/// `√(A(1 + V)) ≤ √A·√V + √A`.
pub fn xi_ml_poly(k: usize, t: u64) -> Result<Xi> {
    if k < 2 {
        return Err(AggError::DegenerateK);
    }
    let a = (k as f64 * (1.0 + (t as f64).ln_1p())).sqrt();
    Ok(Xi {
        xi1: a / (k as f64).ln().sqrt(),
        xi2: a,
    })
}

/// `√a + c`, an upper bound on every `x ≥ 0` with `x² ≤ a + cx`.
pub fn solve_quadratic(a: f64, c: f64) -> Result<f64> {
    for v in [a, c] {
        if v.is_nan() || v < 0.0 {
            return Err(AggError::NegativeInput(v));
        }
    }
    Ok(a.sqrt() + c)
}

// Scalar forms, one expert at a time.

pub fn ml_prod_value(eta: f64, w0: f64, squared_excess: f64) -> f64 {
    (1.0 / w0).ln() / eta + eta * squared_excess
}

pub fn eq5_value(w0: f64, squared_excess: f64) -> f64 {
    2.0 * (squared_excess * (1.0 / w0).ln()).sqrt()
}

pub fn adapt_value(
    initial_rate: f64,
    final_rate: f64,
    w0: f64,
    rate_weighted_sq: f64,
    rate_ratio_excess: f64,
) -> f64 {
    (1.0 / w0).ln() / initial_rate
        + rate_weighted_sq
        + (rate_ratio_excess / E).ln_1p() / final_rate
}

/// `√(1 + V)(3γ + B)/√γ + 2(3γ + B)` with `γ = ln(1/w0)` and `B = B_{K,T}`.
pub fn adapt_uniform_value(k: usize, t: u64, w0: f64, squared_excess: f64) -> f64 {
    let gamma = (1.0 / w0).ln();
    let c = 3.0 * gamma + b_kt(k, t);
    (1.0 + squared_excess).sqrt() * c / gamma.sqrt() + 2.0 * c
}

pub fn ml_poly_value(k: usize, t: u64, squared_excess: f64) -> f64 {
    (k as f64 * (1.0 + (t as f64).ln_1p()) * (1.0 + squared_excess)).sqrt()
}

/// `4γ + 2√(Var · γ)` with `γ = ln(1/w0)`.
pub fn variance_value(w0: f64, variance: f64) -> f64 {
    let gamma = (1.0 / w0).ln();
    4.0 * gamma + 2.0 * (variance.max(0.0) * gamma).sqrt()
}

/// Variance form implied by `(Ξ₁, Ξ₂)`:
/// `Ξ₁√(ln K · Var) + Ξ₁² ln K + Ξ₁Ξ₂√ln K + Ξ₂`.
pub fn variance_value_xi(xi: Xi, ln_k: f64, variance: f64) -> f64 {
    xi.xi1 * (ln_k * variance.max(0.0)).sqrt()
        + xi.xi1 * xi.xi1 * ln_k
        + xi.xi1 * xi.xi2 * ln_k.sqrt()
        + xi.xi2
}

pub fn small_excess_value(xi: Xi, ln_k: f64, negative_part: f64) -> f64 {
    2.0 * xi.xi1 * (ln_k * negative_part).sqrt() + small_excess_constant(xi, ln_k)
}

/// `Ξ₂ + 2Ξ₁√(Ξ₂ ln K) + 4Ξ₁² ln K`.
pub fn small_excess_constant(xi: Xi, ln_k: f64) -> f64 {
    xi.xi2 + 2.0 * xi.xi1 * (xi.xi2 * ln_k).sqrt() + 4.0 * xi.xi1 * xi.xi1 * ln_k
}

/// The square-root term `Ξ₁√(ln K · Σ_t I_{k,t}² r_{k,t}²)`.
pub fn confidence_sqrt_term(xi: Xi, ln_k: f64, confidence_squared_excess: f64) -> f64 {
    xi.xi1 * (ln_k * confidence_squared_excess).sqrt()
}

pub fn confidence_value(xi: Xi, ln_k: f64, confidence_squared_excess: f64) -> f64 {
    confidence_sqrt_term(xi, ln_k, confidence_squared_excess) + xi.xi2
}

/// The loss term `(e - 1)η Σ_t I_{k,t} ℓ_{k,t}`.
pub fn mlc_hedge_loss_term(eta: f64, weighted_loss: f64) -> f64 {
    (E - 1.0) * eta * weighted_loss
}

pub fn mlc_hedge_value(eta: f64, w0: f64, weighted_loss: f64) -> f64 {
    let gamma = (1.0 / w0).ln();
    gamma / eta + mlc_hedge_loss_term(eta, weighted_loss) + (E - 1.0) * gamma
}

/// The loss term `2√((e - 1) Σ_t I_{k,t} ℓ_{k,t} · ln(1/w0))` after tuning η.
pub fn mlc_hedge_optimized_loss_term(w0: f64, weighted_loss: f64) -> f64 {
    2.0 * ((E - 1.0) * weighted_loss * (1.0 / w0).ln()).sqrt()
}

pub fn mlc_hedge_optimized_value(w0: f64, weighted_loss: f64) -> f64 {
    mlc_hedge_optimized_loss_term(w0, weighted_loss) + (E - 1.0) * (1.0 / w0).ln()
}

/// Expected and high-probability constants for the regret of the best
/// expert under a stochastic gap `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidBound {
    pub expected: f64,
    pub high_probability: Option<f64>,
}

/// `C = Ξ₁² ln K/α + Ξ₁√(Ξ₂ ln K/α) + Ξ₂`, and with `δ` also
/// `C + (6Ξ₁/α)√((ln(1/δ) + ln(1 + ln(1 + C/4)/(2e))) ln K)`.
pub fn bound_iid(xi: Xi, ln_k: f64, alpha: f64, delta: Option<f64>) -> Result<IidBound> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(AggError::AlphaOutOfRange(alpha));
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(AggError::DeltaOutOfRange(d));
        }
    }
    let c = xi.xi1 * xi.xi1 * ln_k / alpha + xi.xi1 * (xi.xi2 * ln_k / alpha).sqrt() + xi.xi2;
    let high_probability = delta.map(|d| {
        let inner = (1.0 / d).ln() + ((c / 4.0).ln_1p() / (2.0 * E)).ln_1p();
        c + 6.0 * xi.xi1 / alpha * (inner * ln_k).sqrt()
    });
    Ok(IidBound {
        expected: c,
        high_probability,
    })
}

// Ledger reports.

fn per_expert<F: Fn(usize) -> f64>(k: usize, f: F) -> Vec<f64> {
    (0..k).map(f).collect()
}

fn check_config(ledger: &RegretLedger, len: usize, what: &str) -> Result<()> {
    if ledger.expert_count() == len {
        Ok(())
    } else {
        Err(AggError::ConfigMismatch(format!(
            "ledger has {} experts but {what} has {len}",
            ledger.expert_count()
        )))
    }
}

fn ln_k(ledger: &RegretLedger) -> f64 {
    (ledger.expert_count() as f64).ln()
}

/// ML-Prod with the rates of `config` (default 1/2).
pub fn bound_theorem1(ledger: &RegretLedger, config: &LearnerConfig) -> Result<BoundReport> {
    let k = ledger.expert_count();
    check_config(ledger, config.expert_count, "config")?;
    let priors = config.priors()?;
    let rates = config.rates_or(0.5);
    check_config(ledger, rates.len(), "rate vector")?;
    let bound = per_expert(k, |i| ml_prod_value(rates[i], priors[i], ledger.squared_excess[i]));
    Ok(BoundReport::new(
        TheoremId::T1,
        BoundStatus::Proved,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

/// The fixed-rate bound at its hindsight-optimal rate; no algorithm is
/// guaranteed to reach it.
pub fn bound_eq5(ledger: &RegretLedger, priors: &[f64]) -> Result<BoundReport> {
    check_config(ledger, priors.len(), "prior vector")?;
    let bound = per_expert(ledger.expert_count(), |i| {
        eq5_value(priors[i], ledger.squared_excess[i])
    });
    Ok(BoundReport::new(
        TheoremId::Eq5,
        BoundStatus::Informational,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

pub fn bound_theorem2(ledger: &RegretLedger, terms: &AdaptBoundTerms) -> Result<BoundReport> {
    check_config(ledger, terms.priors.len(), "rate state")?;
    let bound = per_expert(ledger.expert_count(), |i| {
        adapt_value(
            terms.initial_rates[i],
            terms.final_rates[i],
            terms.priors[i],
            terms.rate_weighted_sq[i],
            terms.rate_ratio_excess,
        )
    });
    Ok(BoundReport::new(
        TheoremId::T2,
        BoundStatus::Proved,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

/// Adapt-ML-Prod with the default rate rule and priors `w0`.
pub fn bound_corollary3(ledger: &RegretLedger, w0: &[f64]) -> Result<BoundReport> {
    let k = ledger.expert_count();
    if k < 2 {
        return Err(AggError::DegenerateK);
    }
    check_config(ledger, w0.len(), "prior vector")?;
    let t = ledger.round_count;
    let bound = per_expert(k, |i| adapt_uniform_value(k, t, w0[i], ledger.squared_excess[i]));
    Ok(BoundReport::new(
        TheoremId::C3,
        BoundStatus::Proved,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

pub fn bound_theorem4(ledger: &RegretLedger) -> Result<BoundReport> {
    let k = ledger.expert_count();
    let t = ledger.round_count;
    let bound = per_expert(k, |i| ml_poly_value(k, t, ledger.squared_excess[i]));
    Ok(BoundReport::new(
        TheoremId::T4,
        BoundStatus::Proved,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

/// `Σ_t (r_{k,t} - R_{k,T}/T)²`, via `Σ r² - R²/T`, clamped at zero.
pub fn empirical_variance(ledger: &RegretLedger) -> Vec<f64> {
    let t = ledger.round_count as f64;
    ledger
        .squared_excess
        .iter()
        .zip(&ledger.cumulative_regret)
        .map(|(s, r)| if t > 0.0 { (s - r * r / t).max(0.0) } else { 0.0 })
        .collect()
}

/// Variance form of the bound. Without `xi` this is the form implied by
/// the hindsight-optimal rate; with `xi` it is derived from the learner's
/// own constants. Both are informational.
pub fn bound_variance(
    ledger: &RegretLedger,
    priors: &[f64],
    xi: Option<Xi>,
) -> Result<BoundReport> {
    check_config(ledger, priors.len(), "prior vector")?;
    let var = empirical_variance(ledger);
    let lk = ln_k(ledger);
    let bound = per_expert(ledger.expert_count(), |i| match xi {
        None => variance_value(priors[i], var[i]),
        Some(xi) => variance_value_xi(xi, lk, var[i]),
    });
    Ok(BoundReport::new(
        TheoremId::Eq6,
        BoundStatus::Informational,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

pub fn bound_small_excess(ledger: &RegretLedger, xi: Xi) -> Result<BoundReport> {
    let lk = ln_k(ledger);
    let bound = per_expert(ledger.expert_count(), |i| {
        small_excess_value(xi, lk, ledger.negative_part[i])
    });
    Ok(BoundReport::new(
        TheoremId::Isel,
        BoundStatus::Proved,
        bound,
        ledger.cumulative_regret.clone(),
    ))
}

/// Confidence regret of a reduction whose inner learner has constants `xi`.
pub fn bound_corollary5(ledger: &RegretLedger, xi: Xi) -> Result<BoundReport> {
    let lk = ln_k(ledger);
    let bound = per_expert(ledger.expert_count(), |i| {
        confidence_value(xi, lk, ledger.confidence_squared_excess[i])
    });
    Ok(BoundReport::new(
        TheoremId::C5,
        BoundStatus::Proved,
        bound,
        ledger.confidence_regret.clone(),
    ))
}

/// High-probability regret bound for the best expert `best` under gap `alpha`.
pub fn bound_iid_report(
    ledger: &RegretLedger,
    xi: Xi,
    best: usize,
    alpha: f64,
    delta: f64,
) -> Result<BoundReport> {
    if best >= ledger.expert_count() {
        return Err(AggError::DimensionMismatch {
            expected: ledger.expert_count(),
            found: best + 1,
        });
    }
    let b = bound_iid(xi, ln_k(ledger), alpha, Some(delta))?;
    Ok(BoundReport::for_experts(
        TheoremId::Iid,
        BoundStatus::HighProbability,
        vec![best],
        vec![b.high_probability.expect("delta supplied")],
        vec![ledger.cumulative_regret[best]],
    ))
}

/// MLC-Hedge with the rates of `config` (default 1/2).
pub fn bound_mlc_hedge(ledger: &RegretLedger, config: &LearnerConfig) -> Result<BoundReport> {
    check_config(ledger, config.expert_count, "config")?;
    let priors = config.priors()?;
    let rates = config.rates_or(0.5);
    check_config(ledger, rates.len(), "rate vector")?;
    let bound = per_expert(ledger.expert_count(), |i| {
        mlc_hedge_value(rates[i], priors[i], ledger.weighted_loss[i])
    });
    Ok(BoundReport::new(
        TheoremId::T7,
        BoundStatus::Proved,
        bound,
        ledger.confidence_regret.clone(),
    ))
}

/// The MLC-Hedge bound at its hindsight-optimal rate.
pub fn bound_mlc_hedge_optimized(ledger: &RegretLedger, priors: &[f64]) -> Result<BoundReport> {
    check_config(ledger, priors.len(), "prior vector")?;
    let bound = per_expert(ledger.expert_count(), |i| {
        mlc_hedge_optimized_value(priors[i], ledger.weighted_loss[i])
    });
    Ok(BoundReport::new(
        TheoremId::T7,
        BoundStatus::Informational,
        bound,
        ledger.confidence_regret.clone(),
    ))
}
