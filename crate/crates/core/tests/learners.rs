mod common;

use common::*;
use excess_agg::learners::{AdaptMlProd, ConfidenceLearner, Learner, MlPoly, MlProd, MlcHedge};
use excess_agg::{ConfidenceVector, LearnerConfig, LossVector};
use proptest::prelude::*;

fn lv(v: &[f64]) -> LossVector {
    LossVector::new(v.to_vec()).unwrap()
}

fn normalize(scores: &[f64]) -> Vec<f64> {
    let s: f64 = scores.iter().sum();
    scores.iter().map(|x| x / s).collect()
}

struct ProdOracle {
    w: Vec<f64>,
    eta: Vec<f64>,
}

impl ProdOracle {
    fn mixture(&self) -> Vec<f64> {
        normalize(&self.w.iter().zip(&self.eta).map(|(w, e)| w * e).collect::<Vec<_>>())
    }

    fn update(&mut self, losses: &[f64]) {
        let p = self.mixture();
        let agg: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for k in 0..self.w.len() {
            self.w[k] *= 1.0 + self.eta[k] * (agg - losses[k]);
        }
    }
}

struct AdaptOracle {
    w: Vec<f64>,
    eta: Vec<f64>,
    gamma: Vec<f64>,
    cum: Vec<f64>,
}

impl AdaptOracle {
    fn new(w0: Vec<f64>) -> Self {
        let gamma: Vec<f64> = w0.iter().map(|w| (1.0 / w).ln()).collect();
        let eta = gamma.iter().map(|g| g.sqrt().min(0.5)).collect();
        Self {
            cum: vec![1.0; w0.len()],
            w: w0,
            eta,
            gamma,
        }
    }

    fn mixture(&self) -> Vec<f64> {
        normalize(&self.w.iter().zip(&self.eta).map(|(w, e)| w * e).collect::<Vec<_>>())
    }

    fn update(&mut self, losses: &[f64]) {
        let p = self.mixture();
        let agg: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for k in 0..self.w.len() {
            let r = agg - losses[k];
            self.cum[k] += r * r;
            let next = (self.gamma[k] / self.cum[k]).sqrt().min(0.5);
            self.w[k] = (self.w[k] * (1.0 + self.eta[k] * r)).powf(next / self.eta[k]);
            self.eta[k] = next;
        }
    }
}

struct PolyOracle {
    regret: Vec<f64>,
    cum: Vec<f64>,
}

impl PolyOracle {
    fn mixture(&self) -> Vec<f64> {
        let s: Vec<f64> = self
            .regret
            .iter()
            .zip(&self.cum)
            .map(|(r, c)| r.max(0.0) / c)
            .collect();
        if s.iter().sum::<f64>() > 0.0 {
            normalize(&s)
        } else {
            vec![1.0 / s.len() as f64; s.len()]
        }
    }

    fn update(&mut self, losses: &[f64]) {
        let p = self.mixture();
        let agg: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for k in 0..losses.len() {
            let r = agg - losses[k];
            self.regret[k] += r;
            self.cum[k] += r * r;
        }
    }
}

struct HedgeOracle {
    w: Vec<f64>,
    eta: Vec<f64>,
}

impl HedgeOracle {
    fn mixture(&self, conf: &[f64]) -> Vec<f64> {
        normalize(
            &(0..self.w.len())
                .map(|k| conf[k] * (1.0 - (-self.eta[k]).exp()) * self.w[k])
                .collect::<Vec<_>>(),
        )
    }

    fn update(&mut self, losses: &[f64], conf: &[f64]) {
        let p = self.mixture(conf);
        let agg: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for k in 0..self.w.len() {
            let e = self.eta[k];
            self.w[k] *= (e * conf[k] * ((-e).exp() * agg - losses[k])).exp();
        }
    }
}

fn priors_from(seed: u64, k: usize) -> Vec<f64> {
    use rand::Rng;
    let mut r = rng(seed ^ 0x9e37);
    normalize(&(0..k).map(|_| 0.05 + r.gen::<f64>()).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ml_prod_matches_linear_oracle(seed in any::<u64>(), k in 2usize..8, t in 1usize..300) {
        use rand::Rng;
        let mut r = rng(seed);
        let rates: Vec<f64> = (0..k).map(|_| r.gen_range(0.01..=0.5)).collect();
        let w0 = priors_from(seed, k);
        let cfg = LearnerConfig::uniform(k).with_rates(rates.clone()).with_initial_weights(w0.clone());
        let mut learner = MlProd::new(&cfg).unwrap();
        let mut oracle = ProdOracle { w: w0, eta: rates };
        for losses in uniform_losses(seed, k, t) {
            assert_vec_close(learner.predict().weights(), &oracle.mixture(), 1e-12, "mixture");
            learner.update(&lv(&losses)).unwrap();
            oracle.update(&losses);
            assert_close(learner.total_weight(), 1.0, 1e-9, "W_t");
        }
        assert_vec_close(&learner.weights(), &oracle.w, 1e-10, "weights");
    }

    #[test]
    fn adapt_ml_prod_matches_linear_oracle(seed in any::<u64>(), k in 2usize..8, t in 1usize..300, uniform in any::<bool>()) {
        let w0 = if uniform { vec![1.0 / k as f64; k] } else { priors_from(seed, k) };
        let cfg = LearnerConfig::uniform(k).with_initial_weights(w0.clone());
        let mut learner = AdaptMlProd::new(&cfg).unwrap();
        let mut oracle = AdaptOracle::new(w0);
        for losses in rough_losses(seed, k, t) {
            assert_vec_close(learner.predict().weights(), &oracle.mixture(), 1e-11, "mixture");
            let before = learner.rates().to_vec();
            learner.update(&lv(&losses)).unwrap();
            oracle.update(&losses);
            assert_vec_close(learner.rates(), &oracle.eta, 1e-13, "rates");
            for (a, b) in learner.rates().iter().zip(&before) {
                prop_assert!(a <= b, "rates must not increase");
            }
            prop_assert!(learner.total_weight() <= learner.potential_ceiling() + 1e-9);
        }
    }

    #[test]
    fn ml_poly_matches_oracle(seed in any::<u64>(), k in 2usize..8, t in 1usize..300) {
        let mut learner = MlPoly::new(&LearnerConfig::uniform(k)).unwrap();
        let mut oracle = PolyOracle { regret: vec![0.0; k], cum: vec![1.0; k] };
        for losses in rough_losses(seed, k, t) {
            assert_vec_close(learner.predict().weights(), &oracle.mixture(), 1e-12, "mixture");
            let before_rates = learner.rates().to_vec();
            let before_potential = learner.potential();
            let o = learner.update(&lv(&losses)).unwrap();
            oracle.update(&losses);
            let increment: f64 = before_rates
                .iter()
                .zip(&o.instantaneous_regrets)
                .map(|(e, r)| e * r * r)
                .sum();
            prop_assert!(learner.potential() <= before_potential + increment + 1e-9);
            for (a, b) in learner.rates().iter().zip(&before_rates) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn mlc_hedge_matches_oracle(seed in any::<u64>(), k in 2usize..8, t in 1usize..300) {
        use rand::Rng;
        let mut r = rng(seed);
        let rates: Vec<f64> = (0..k).map(|_| r.gen_range(0.05..=1.0)).collect();
        let mut learner = MlcHedge::new(&LearnerConfig::uniform(k).with_rates(rates.clone())).unwrap();
        let mut oracle = HedgeOracle { w: vec![1.0 / k as f64; k], eta: rates };
        let confs = random_confidences(seed, k, t);
        for (losses, conf) in uniform_losses(seed, k, t).iter().zip(&confs) {
            let cv = ConfidenceVector::new(conf.clone()).unwrap();
            let p = learner.predict(&cv).unwrap();
            assert_vec_close(p.weights(), &oracle.mixture(conf), 1e-11, "mixture");
            for (pk, ck) in p.weights().iter().zip(conf) {
                if *ck == 0.0 {
                    prop_assert_eq!(*pk, 0.0);
                }
            }
            learner.update(&lv(losses), &cv).unwrap();
            oracle.update(losses, conf);
        }
    }

    #[test]
    fn ledgers_match_replay(seed in any::<u64>(), k in 1usize..7, t in 1usize..200) {
        let losses = uniform_losses(seed, k, t);
        let cfg = LearnerConfig::uniform(k);
        let mut learners: Vec<Box<dyn Learner>> = vec![
            Box::new(MlProd::new(&cfg).unwrap()),
            Box::new(AdaptMlProd::new(&cfg).unwrap()),
            Box::new(MlPoly::new(&cfg).unwrap()),
        ];
        for l in learners.iter_mut() {
            let mut replay = Replay::new(k);
            for row in &losses {
                let p = l.predict().weights().to_vec();
                l.update(&lv(row)).unwrap();
                replay.push(&p, row, None);
            }
            let ledger = l.ledger();
            assert_vec_close(&ledger.cumulative_regret, &replay.regret, 1e-9, "R");
            assert_vec_close(&ledger.squared_excess, &replay.squared, 1e-9, "V");
            assert_vec_close(&ledger.negative_part, &replay.negative, 1e-9, "R-");
            for i in 0..k {
                assert_close(ledger.positive_part[i] - ledger.negative_part[i], ledger.cumulative_regret[i], 1e-9, "R+ - R-");
            }
            prop_assert_eq!(ledger.round_count, t as u64);
        }
    }

    #[test]
    fn permuting_experts_permutes_mixtures(seed in any::<u64>(), k in 2usize..7, t in 1usize..150) {
        let losses = uniform_losses(seed, k, t);
        let perm: Vec<usize> = (0..k).rev().collect();
        let cfg = LearnerConfig::uniform(k);
        let pairs: Vec<(Box<dyn Learner>, Box<dyn Learner>)> = vec![
            (Box::new(MlProd::new(&cfg).unwrap()), Box::new(MlProd::new(&cfg).unwrap())),
            (Box::new(AdaptMlProd::new(&cfg).unwrap()), Box::new(AdaptMlProd::new(&cfg).unwrap())),
            (Box::new(MlPoly::new(&cfg).unwrap()), Box::new(MlPoly::new(&cfg).unwrap())),
        ];
        for (mut a, mut b) in pairs {
            for row in &losses {
                let permuted: Vec<f64> = perm.iter().map(|&i| row[i]).collect();
                let pa = a.predict();
                let pb = b.predict();
                for (j, &i) in perm.iter().enumerate() {
                    assert_close(pb.weights()[j], pa.weights()[i], 1e-12, "permuted mixture");
                }
                a.update(&lv(row)).unwrap();
                b.update(&lv(&permuted)).unwrap();
            }
        }
        // MLC-Hedge with permuted confidences
        let confs = random_confidences(seed, k, t);
        let hc = LearnerConfig::uniform(k).with_constant_rate(0.3);
        let mut a = MlcHedge::new(&hc).unwrap();
        let mut b = MlcHedge::new(&hc).unwrap();
        for (row, c) in losses.iter().zip(&confs) {
            let pr: Vec<f64> = perm.iter().map(|&i| row[i]).collect();
            let pc: Vec<f64> = perm.iter().map(|&i| c[i]).collect();
            let ca = ConfidenceVector::new(c.clone()).unwrap();
            let cb = ConfidenceVector::new(pc).unwrap();
            let pa = a.predict(&ca).unwrap();
            let pb = b.predict(&cb).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                assert_close(pb.weights()[j], pa.weights()[i], 1e-12, "permuted hedge mixture");
            }
            a.update(&lv(row), &ca).unwrap();
            b.update(&lv(&pr), &cb).unwrap();
        }
    }

    #[test]
    fn common_shift_leaves_mixtures_unchanged(seed in any::<u64>(), k in 2usize..7, t in 1usize..200, shift in 0.0f64..0.5) {
        let base: Vec<Vec<f64>> = uniform_losses(seed, k, t)
            .into_iter()
            .map(|row| row.into_iter().map(|x| 0.5 * x).collect())
            .collect();
        let cfg = LearnerConfig::uniform(k);
        let pairs: Vec<(Box<dyn Learner>, Box<dyn Learner>)> = vec![
            (Box::new(MlProd::new(&cfg).unwrap()), Box::new(MlProd::new(&cfg).unwrap())),
            (Box::new(AdaptMlProd::new(&cfg).unwrap()), Box::new(AdaptMlProd::new(&cfg).unwrap())),
            (Box::new(MlPoly::new(&cfg).unwrap()), Box::new(MlPoly::new(&cfg).unwrap())),
        ];
        for (mut a, mut b) in pairs {
            for row in &base {
                let shifted: Vec<f64> = row.iter().map(|x| x + shift).collect();
                assert_vec_close(a.predict().weights(), b.predict().weights(), 1e-12, "shifted mixture");
                a.update(&lv(row)).unwrap();
                b.update(&lv(&shifted)).unwrap();
            }
        }
    }
}

#[test]
fn single_expert_learners_play_point_mass() {
    let cfg = LearnerConfig::uniform(1);
    let mut ls: Vec<Box<dyn Learner>> = vec![
        Box::new(MlProd::new(&cfg).unwrap()),
        Box::new(AdaptMlProd::new(&cfg).unwrap()),
        Box::new(MlPoly::new(&cfg).unwrap()),
    ];
    for l in ls.iter_mut() {
        for x in [0.0, 0.3, 1.0] {
            let o = l.update(&lv(&[x])).unwrap();
            assert_eq!(o.mixture.weights(), &[1.0]);
            assert_eq!(o.instantaneous_regrets, vec![0.0]);
        }
    }
    let mut h = MlcHedge::new(&cfg).unwrap();
    let o = h.step(&lv(&[0.4]), &ConfidenceVector::ones(1)).unwrap();
    assert_eq!(o.mixture.weights(), &[1.0]);
}

#[test]
fn ml_prod_conserves_weight_over_long_runs() {
    let mut l = MlProd::new(&LearnerConfig::uniform(5)).unwrap();
    for row in uniform_losses(7, 5, 500) {
        l.update(&lv(&row)).unwrap();
    }
    assert!((l.total_weight() - 1.0).abs() < 1e-9);
}

#[test]
fn adapt_potential_on_three_experts() {
    let mut l = AdaptMlProd::new(&LearnerConfig::uniform(3)).unwrap();
    for row in uniform_losses(11, 3, 2000) {
        l.update(&lv(&row)).unwrap();
        assert!(l.total_weight() <= l.potential_ceiling() + 1e-9);
    }
}

#[test]
fn ml_prod_weights_stay_positive_when_an_expert_always_loses() {
    let mut l = MlProd::new(&LearnerConfig::uniform(2)).unwrap();
    for _ in 0..5000 {
        l.update(&lv(&[0.0, 1.0])).unwrap();
    }
    assert!(l.log_weights()[1].is_finite());
    assert!(l.predict().weights()[0] > 0.999);
}
