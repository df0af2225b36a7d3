//! Seeded loss and confidence generators.
//!
//! Round `t` is a pure function of `(seed, t)`: each round draws from its
//! own ChaCha stream, so rounds can be produced in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};
use crate::types::{ConfidenceVector, LossVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Independent Bernoulli losses with the given means. The smallest mean
    /// must beat every other one by at least `alpha`.
    IidGap { means: Vec<f64>, alpha: f64 },
    /// Independent uniform losses.
    AdversarialRandom,
    /// Two experts alternating `(0, 1), (1, 0), …`.
    Alternating,
    /// Expert 0 draws uniform losses in `[0, epsilon]`, the others in `[0, 1]`.
    SmallLoss { epsilon: f64 },
    /// Uniform losses in `[-1, 0]` (negated gains), declared range `(-1, 0)`.
    GainFramed,
    /// One uniform loss per round shared by every expert.
    Identical,
    /// Uniform losses; each expert is awake with probability `p`.
    ConfidenceBernoulli { p: f64 },
    /// Uniform losses; expert `k` reports `λ_k · U` with `U` uniform.
    ConfidenceScaled { lambda: Vec<f64> },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::IidGap { .. } => "iid_gap",
            GeneratorKind::AdversarialRandom => "adversarial_random",
            GeneratorKind::Alternating => "alternating",
            GeneratorKind::SmallLoss { .. } => "small_loss",
            GeneratorKind::GainFramed => "gain_framed",
            GeneratorKind::Identical => "identical",
            GeneratorKind::ConfidenceBernoulli { .. } => "confidence_bernoulli",
            GeneratorKind::ConfidenceScaled { .. } => "confidence_scaled",
        }
    }

    pub fn emits_confidences(&self) -> bool {
        matches!(
            self,
            GeneratorKind::ConfidenceBernoulli { .. } | GeneratorKind::ConfidenceScaled { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub experts: usize,
    pub rounds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub losses: LossVector,
    pub confidences: Option<ConfidenceVector>,
}

fn invalid(msg: impl Into<String>) -> AggError {
    AggError::InvalidSpec(msg.into())
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, experts: usize, rounds: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            experts,
            rounds,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.experts;
        if k == 0 {
            return Err(invalid("need at least one expert"));
        }
        match &self.kind {
            GeneratorKind::IidGap { means, alpha } => {
                if means.len() != k {
                    return Err(invalid(format!("iid_gap needs {k} means, got {}", means.len())));
                }
                if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                    return Err(invalid(format!("mean {m} outside [0, 1]")));
                }
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(invalid(format!("alpha {alpha} outside (0, 1]")));
                }
                if k < 2 {
                    return Err(invalid("iid_gap needs at least two experts"));
                }
                let best = self.best_expert().expect("iid_gap");
                let gap = means
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != best)
                    .map(|(_, m)| m - means[best])
                    .fold(f64::INFINITY, f64::min);
                if gap < alpha - 1e-12 {
                    return Err(invalid(format!("mean gap {gap} is below alpha {alpha}")));
                }
            }
            GeneratorKind::Alternating if k != 2 => {
                return Err(invalid("alternating needs exactly two experts"));
            }
            GeneratorKind::SmallLoss { epsilon } if !(*epsilon >= 0.0 && *epsilon <= 1.0) => {
                return Err(invalid(format!("epsilon {epsilon} outside [0, 1]")));
            }
            GeneratorKind::ConfidenceBernoulli { p } if !(*p > 0.0 && *p <= 1.0) => {
                return Err(invalid(format!("awake probability {p} outside (0, 1]")));
            }
            GeneratorKind::ConfidenceScaled { lambda } => {
                if lambda.len() != k {
                    return Err(invalid(format!("need {k} scales, got {}", lambda.len())));
                }
                if let Some(l) = lambda.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                    return Err(invalid(format!("scale {l} outside [0, 1]")));
                }
                if lambda.iter().all(|&l| l == 0.0) {
                    return Err(invalid("at least one scale must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Declared range of the raw losses.
    pub fn loss_range(&self) -> (f64, f64) {
        match self.kind {
            GeneratorKind::GainFramed => (-1.0, 0.0),
            _ => (0.0, 1.0),
        }
    }

    /// The expert with the smallest mean, for `iid_gap`.
    pub fn best_expert(&self) -> Option<usize> {
        match &self.kind {
            GeneratorKind::IidGap { means, .. } => Some(crate::ledger::argmin(means)),
            _ => None,
        }
    }

    /// Round `t` (starting at 0).
    pub fn round(&self, t: usize) -> Result<Round> {
        let k = self.experts;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..k).map(|_| rng.gen::<f64>()).collect() };
        let (raw, confidences) = match &self.kind {
            GeneratorKind::IidGap { means, .. } => (
                means
                    .iter()
                    .map(|&m| if rng.gen::<f64>() < m { 1.0 } else { 0.0 })
                    .collect(),
                None,
            ),
            GeneratorKind::AdversarialRandom => (uniform(&mut rng), None),
            GeneratorKind::Alternating => {
                let v = if t.is_multiple_of(2) { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
                (v, None)
            }
            GeneratorKind::SmallLoss { epsilon } => {
                let mut v = uniform(&mut rng);
                v[0] *= epsilon;
                (v, None)
            }
            GeneratorKind::GainFramed => (uniform(&mut rng).into_iter().map(|u| -u).collect(), None),
            GeneratorKind::Identical => (vec![rng.gen::<f64>(); k], None),
            GeneratorKind::ConfidenceBernoulli { p } => {
                let losses = uniform(&mut rng);
                let mut conf: Vec<f64> = (0..k)
                    .map(|_| if rng.gen::<f64>() < *p { 1.0 } else { 0.0 })
                    .collect();
                if conf.iter().all(|&c| c == 0.0) {
                    // keep the active set nonempty
                    conf[t % k] = 1.0;
                }
                (losses, Some(conf))
            }
            GeneratorKind::ConfidenceScaled { lambda } => {
                let losses = uniform(&mut rng);
                let mut conf: Vec<f64> = lambda.iter().map(|l| l * rng.gen::<f64>()).collect();
                if conf.iter().all(|&c| c == 0.0) {
                    let top = crate::ledger::argmin(&lambda.iter().map(|l| -l).collect::<Vec<_>>());
                    conf[top] = lambda[top];
                }
                (losses, Some(conf))
            }
        };
        Ok(Round {
            losses: LossVector::from_raw(raw, self.loss_range())?,
            confidences: confidences.map(ConfidenceVector::new).transpose()?,
        })
    }

    /// All `rounds` rounds in order.
    pub fn iter(&self) -> impl Iterator<Item = Round> + '_ {
        (0..self.rounds).map(move |t| self.round(t).expect("validated spec emits valid rounds"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind, k: usize, t: usize) -> GeneratorSpec {
        GeneratorSpec::new(kind, k, t, 42).unwrap()
    }

    #[test]
    fn identical_rounds_share_losses() {
        for r in spec(GeneratorKind::Identical, 3, 50).iter() {
            let v = r.losses.values();
            assert!(v.iter().all(|&x| x == v[0]));
        }
    }

    #[test]
    fn rounds_are_pure_functions_of_seed_and_index() {
        let s = spec(GeneratorKind::ConfidenceBernoulli { p: 0.5 }, 4, 100);
        let forward: Vec<_> = s.iter().collect();
        for t in (0..100).rev() {
            assert_eq!(s.round(t).unwrap(), forward[t]);
        }
        let other = GeneratorSpec { seed: 43, ..s.clone() };
        assert_ne!(other.round(0).unwrap(), forward[0]);
    }

    #[test]
    fn gain_framed_rescales_into_unit_interval() {
        for r in spec(GeneratorKind::GainFramed, 3, 20).iter() {
            assert_eq!(r.losses.original_range(), (-1.0, 0.0));
            for (v, raw) in r.losses.values().iter().zip(r.losses.raw()) {
                assert!(*raw <= 0.0 && *raw >= -1.0);
                assert_eq!(*v, raw + 1.0);
            }
        }
    }

    #[test]
    fn alternating_pattern() {
        let s = spec(GeneratorKind::Alternating, 2, 4);
        let v: Vec<Vec<f64>> = s.iter().map(|r| r.losses.values().to_vec()).collect();
        assert_eq!(v, vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn confidences_are_scaled() {
        let s = spec(GeneratorKind::ConfidenceScaled { lambda: vec![1.0, 0.1] }, 2, 200);
        for r in s.iter() {
            assert!(r.confidences.unwrap().values()[1] <= 0.1);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            (GeneratorKind::IidGap { means: vec![0.3, 0.4], alpha: 0.2 }, 2),
            (GeneratorKind::IidGap { means: vec![0.3], alpha: 0.2 }, 2),
            (GeneratorKind::Alternating, 3),
            (GeneratorKind::ConfidenceBernoulli { p: 0.0 }, 2),
            (GeneratorKind::ConfidenceScaled { lambda: vec![0.0, 0.0] }, 2),
            (GeneratorKind::SmallLoss { epsilon: 2.0 }, 2),
        ];
        for (kind, k) in bad {
            assert!(matches!(GeneratorSpec::new(kind, k, 10, 0), Err(AggError::InvalidSpec(_))));
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = spec(GeneratorKind::IidGap { means: vec![0.3, 0.5, 0.5], alpha: 0.2 }, 3, 10);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&json).unwrap(), s);
    }
}
