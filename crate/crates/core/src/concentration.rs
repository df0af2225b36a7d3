//! A Bernstein-Freedman martingale bound with an adaptive Λ, a Monte-Carlo
//! checker for it, and two scalar inequalities used in the regret proofs.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};

/// `γ = 1 + (1/2e)(1 + ln(1 + E[Σ V_t]))`.
pub fn gamma(expected_sum_variance: f64) -> f64 {
    1.0 + (1.0 + expected_sum_variance.ln_1p()) / (2.0 * E)
}

/// `3√((1 + ΣV) ln(γ/δ)) + ln(γ/δ)`.
pub fn freedman_bound(sum_variance: f64, expected_sum_variance: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AggError::DeltaOutOfRange(delta));
    }
    for v in [sum_variance, expected_sum_variance] {
        if v.is_nan() || v < 0.0 {
            return Err(AggError::NegativeInput(v));
        }
    }
    let x = (gamma(expected_sum_variance) / delta).ln();
    Ok(3.0 * ((1.0 + sum_variance) * x).sqrt() + x)
}

/// `φ(λ) = e^λ - λ - 1`.
pub fn phi(lambda: f64) -> f64 {
    lambda.exp_m1() - lambda
}

/// `Λ_t = min{1, √(x / (1 + Σ_{s<t} V_s))}`.
pub fn lambda(x: f64, past_sum_variance: f64) -> f64 {
    (x / (1.0 + past_sum_variance)).sqrt().min(1.0)
}

/// A martingale difference sequence with increments `X_t ≤ 1` and
/// conditional variances known in closed form.
pub trait MartingaleGenerator: std::fmt::Debug + Sync {
    fn name(&self) -> &'static str;

    /// Conditional variance `V_t = E[X_t² | F_{t-1}]` and a draw of `X_t`.
    /// `t` starts at 1; `past_sum` is `Σ_{s<t} X_s`.
    fn step(&self, t: usize, past_sum: f64, rng: &mut ChaCha8Rng) -> (f64, f64);

    /// `E[Σ_{t≤T} V_t]`, when available analytically.
    fn expected_sum_variance(&self, horizon: usize) -> Option<f64>;
}

/// `X_t ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroIncrements;

impl MartingaleGenerator for ZeroIncrements {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn step(&self, _t: usize, _past_sum: f64, _rng: &mut ChaCha8Rng) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn expected_sum_variance(&self, _horizon: usize) -> Option<f64> {
        Some(0.0)
    }
}

/// `X_t = ±amplitude` with equal probability.
#[derive(Debug, Clone, Copy)]
pub struct CenteredCoin {
    pub amplitude: f64,
}

impl MartingaleGenerator for CenteredCoin {
    fn name(&self) -> &'static str {
        "centered_coin"
    }

    fn step(&self, _t: usize, _past_sum: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let x = if rng.gen::<bool>() {
            self.amplitude
        } else {
            -self.amplitude
        };
        (x, self.amplitude * self.amplitude)
    }

    fn expected_sum_variance(&self, horizon: usize) -> Option<f64> {
        Some(horizon as f64 * self.amplitude * self.amplitude)
    }
}

/// `X_t = B_t - p_t` with `B_t ~ Bernoulli(p_t)` and
/// `p_t = base + amplitude · sin(2πt / period)`.
#[derive(Debug, Clone, Copy)]
pub struct OscillatingBernoulli {
    pub base: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl OscillatingBernoulli {
    pub fn bias(&self, t: usize) -> f64 {
        let p = self.base + self.amplitude * (std::f64::consts::TAU * t as f64 / self.period).sin();
        p.clamp(0.0, 1.0)
    }
}

impl MartingaleGenerator for OscillatingBernoulli {
    fn name(&self) -> &'static str {
        "oscillating_bernoulli"
    }

    fn step(&self, t: usize, _past_sum: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let p = self.bias(t);
        let b = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
        (b - p, p * (1.0 - p))
    }

    fn expected_sum_variance(&self, horizon: usize) -> Option<f64> {
        Some((1..=horizon).map(|t| {
            let p = self.bias(t);
            p * (1.0 - p)
        }).sum())
    }
}

/// Bernoulli increments whose bias depends on the sign of the running sum:
/// `p_t = high` while `Σ_{s<t} X_s ≤ 0`, else `low`. `E[ΣV]` has no closed
/// form, so the checker estimates it with a pilot run.
#[derive(Debug, Clone, Copy)]
pub struct SignFeedback {
    pub low: f64,
    pub high: f64,
}

impl MartingaleGenerator for SignFeedback {
    fn name(&self) -> &'static str {
        "sign_feedback"
    }

    fn step(&self, _t: usize, past_sum: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let p = if past_sum <= 0.0 { self.high } else { self.low };
        let b = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
        (b - p, p * (1.0 - p))
    }

    fn expected_sum_variance(&self, _horizon: usize) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub horizon: usize,
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
    /// Replications used to estimate `E[ΣV]` when it has no closed form.
    pub pilot_replications: usize,
}

impl MonteCarloConfig {
    pub fn new(horizon: usize, delta: f64, replications: usize, seed: u64) -> Self {
        Self {
            horizon,
            delta,
            replications,
            seed,
            pilot_replications: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub generator: String,
    pub violations: usize,
    pub replications: usize,
    pub violation_rate: f64,
    /// Binomial standard error `√(δ(1-δ)/n)` at the nominal level.
    pub rate_std_error: f64,
    pub expected_sum_variance: f64,
    /// True when `expected_sum_variance` came from a pilot run.
    pub pilot_estimated: bool,
    pub gamma: f64,
    /// `x = ln(γ/δ)`, the level used in the Λ path.
    pub x: f64,
    /// Sample mean of `H_T` over replications.
    pub mean_h: f64,
    /// Standard error of `mean_h`.
    pub h_std_error: f64,
    /// Whether every Λ path was nonincreasing and inside `(0, 1]`.
    pub lambda_paths_valid: bool,
    /// Whether every increment satisfied `X_t ≤ 1`.
    pub increments_valid: bool,
}

struct Path {
    sum: f64,
    sum_variance: f64,
    log_h: f64,
    lambda_valid: bool,
    increments_valid: bool,
}

fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_path<G: MartingaleGenerator + ?Sized>(g: &G, horizon: usize, x: f64, rng: &mut ChaCha8Rng) -> Path {
    let mut sum = 0.0;
    let mut sum_variance = 0.0;
    let mut acc = 0.0;
    let mut prev_lambda = 1.0;
    let mut lambda_valid = true;
    let mut increments_valid = true;
    let mut lam = lambda(x, 0.0);
    for t in 1..=horizon {
        lam = lambda(x, sum_variance);
        lambda_valid &= lam > 0.0 && lam <= prev_lambda;
        prev_lambda = lam;
        let (xt, vt) = g.step(t, sum, rng);
        increments_valid &= xt <= 1.0;
        acc += xt - phi(lam) / lam * vt;
        sum += xt;
        sum_variance += vt;
    }
    Path {
        sum,
        sum_variance,
        log_h: lam * acc,
        lambda_valid,
        increments_valid,
    }
}

/// Fraction of replications where `Σ X_t` exceeds [`freedman_bound`] at the
/// path's realized `Σ V_t`, along with the proof potential
/// `H_T = exp(Λ_T Σ_t (X_t - φ(Λ_t)V_t/Λ_t))`.
///
/// Replication `i` draws from its own ChaCha stream, so results do not
/// depend on execution order.
pub fn monte_carlo_violation_rate<G: MartingaleGenerator + ?Sized>(
    generator: &G,
    config: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    let delta = config.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AggError::DeltaOutOfRange(delta));
    }
    if config.replications == 0 {
        return Err(AggError::DomainError("replications must be positive".into()));
    }
    let (expected_sum_variance, pilot_estimated) =
        match generator.expected_sum_variance(config.horizon) {
            Some(v) => (v, false),
            None => (pilot_sum_variance(generator, config), true),
        };
    let g = gamma(expected_sum_variance);
    let x = (g / delta).ln();

    let mut violations = 0;
    let mut h_sum = 0.0;
    let mut h_sq_sum = 0.0;
    let mut lambda_paths_valid = true;
    let mut increments_valid = true;
    for rep in 0..config.replications {
        let mut rng = replication_rng(config.seed, rep as u64);
        let path = run_path(generator, config.horizon, x, &mut rng);
        if path.sum > freedman_bound(path.sum_variance, expected_sum_variance, delta)? {
            violations += 1;
        }
        let h = path.log_h.exp();
        h_sum += h;
        h_sq_sum += h * h;
        lambda_paths_valid &= path.lambda_valid;
        increments_valid &= path.increments_valid;
    }
    let n = config.replications as f64;
    let mean_h = h_sum / n;
    let var_h = if n > 1.0 {
        ((h_sq_sum - n * mean_h * mean_h) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloReport {
        generator: generator.name().to_string(),
        violations,
        replications: config.replications,
        violation_rate: violations as f64 / n,
        rate_std_error: (delta * (1.0 - delta) / n).sqrt(),
        expected_sum_variance,
        pilot_estimated,
        gamma: g,
        x,
        mean_h,
        h_std_error: (var_h / n).sqrt(),
        lambda_paths_valid,
        increments_valid,
    })
}

fn pilot_sum_variance<G: MartingaleGenerator + ?Sized>(g: &G, config: &MonteCarloConfig) -> f64 {
    let reps = config.pilot_replications.max(1);
    // a seed disjoint from the main run's streams
    let pilot_seed = config.seed ^ 0x5ee_d0f9_1707_u64;
    let total: f64 = (0..reps)
        .map(|rep| {
            let mut rng = replication_rng(pilot_seed, rep as u64);
            run_path(g, config.horizon, 1.0, &mut rng).sum_variance
        })
        .sum();
    total / reps as f64
}

/// `x ≤ x^α + (α - 1)/e`, checked with a `1e-12` margin.
pub fn lemma_exp_gap(x: f64, alpha: f64) -> Result<bool> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(AggError::DomainError(format!("x must be positive, got {x}")));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(AggError::DomainError(format!("alpha must be at least 1, got {alpha}")));
    }
    Ok(x <= x.powf(alpha) + (alpha - 1.0) / E + 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannFn {
    /// `f(x) = 1/x`
    Inverse,
    /// `f(x) = 1/√x`
    InverseSqrt,
}

impl RiemannFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            RiemannFn::Inverse => 1.0 / x,
            RiemannFn::InverseSqrt => 1.0 / x.sqrt(),
        }
    }

    /// `∫_lo^hi f(u) du`.
    pub fn integral(self, lo: f64, hi: f64) -> f64 {
        match self {
            RiemannFn::Inverse => (hi / lo).ln(),
            RiemannFn::InverseSqrt => 2.0 * (hi.sqrt() - lo.sqrt()),
        }
    }
}

/// `Σ_i a_i f(a_0 + … + a_{i-1}) ≤ f(a_0) + ∫_{a_0}^{a_0+…+a_m} f`, at `1e-9`.
pub fn lemma_riemann(a0: f64, a: &[f64], f: RiemannFn) -> Result<bool> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(AggError::DomainError(format!("a0 must be positive, got {a0}")));
    }
    if let Some(bad) = a.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(AggError::DomainError(format!("sequence entry {bad} outside [0, 1]")));
    }
    let mut partial = a0;
    let mut lhs = 0.0;
    for &ai in a {
        lhs += ai * f.eval(partial);
        partial += ai;
    }
    let rhs = f.eval(a0) + f.integral(a0, partial);
    Ok(lhs <= rhs + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_zero_expected_variance() {
        assert_eq!(gamma(0.0), 1.0 + 1.0 / (2.0 * E));
    }

    #[test]
    fn bound_is_four_when_log_term_is_one() {
        let delta = gamma(0.0) / E;
        assert!((freedman_bound(0.0, 0.0, delta).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_grows_slowly() {
        assert!(gamma(1e6) / gamma(1e3) < 2.0);
    }

    #[test]
    fn rejects_bad_delta() {
        assert_eq!(freedman_bound(1.0, 1.0, 1.0), Err(AggError::DeltaOutOfRange(1.0)));
        assert_eq!(freedman_bound(1.0, 1.0, 0.0), Err(AggError::DeltaOutOfRange(0.0)));
    }

    #[test]
    fn zero_generator_never_violates() {
        let r = monte_carlo_violation_rate(&ZeroIncrements, &MonteCarloConfig::new(100, 0.05, 50, 1)).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.mean_h, 1.0);
    }

    #[test]
    fn seeded_runs_reproduce() {
        let g = CenteredCoin { amplitude: 0.5 };
        let cfg = MonteCarloConfig::new(200, 0.2, 100, 9);
        assert_eq!(
            monte_carlo_violation_rate(&g, &cfg).unwrap(),
            monte_carlo_violation_rate(&g, &cfg).unwrap()
        );
    }

    #[test]
    fn pilot_is_flagged() {
        let g = SignFeedback { low: 0.2, high: 0.6 };
        let mut cfg = MonteCarloConfig::new(100, 0.1, 20, 3);
        cfg.pilot_replications = 50;
        let r = monte_carlo_violation_rate(&g, &cfg).unwrap();
        assert!(r.pilot_estimated);
        assert!(r.expected_sum_variance > 0.0);
    }

    #[test]
    fn exp_gap_examples() {
        assert!(lemma_exp_gap(0.7, 1.0).unwrap());
        assert!(lemma_exp_gap(1.0 / E, 2.0).unwrap());
        assert!(lemma_exp_gap(0.0, 2.0).is_err());
        assert!(lemma_exp_gap(1.0, 0.5).is_err());
    }

    #[test]
    fn exp_gap_is_tight_at_its_maximizer() {
        // x - x^α peaks at x = α^{-1/(α-1)} with value (α-1)/e only as α → 1
        let alpha: f64 = 1.000001;
        let x = alpha.powf(-1.0 / (alpha - 1.0));
        let gap = x - x.powf(alpha);
        assert!(gap <= (alpha - 1.0) / E);
        assert!(gap > 0.99 * (alpha - 1.0) / E);
    }

    #[test]
    fn riemann_empty_and_harmonic() {
        assert!(lemma_riemann(1.0, &[], RiemannFn::Inverse).unwrap());
        let ones = vec![1.0; 1000];
        assert!(lemma_riemann(1.0, &ones, RiemannFn::Inverse).unwrap());
        let harmonic: f64 = (1..=1000).map(|t| 1.0 / t as f64).sum();
        assert!(harmonic <= 1.0 + 1001f64.ln());
        assert!(lemma_riemann(0.5, &[1.5], RiemannFn::InverseSqrt).is_err());
    }
}
