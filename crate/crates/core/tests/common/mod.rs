#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const E: f64 = std::f64::consts::E;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_losses(seed: u64, k: usize, t: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..t).map(|_| (0..k).map(|_| r.gen::<f64>()).collect()).collect()
}

/// Uniform losses with occasional exact 0/1 and ties, to hit edge cases.
pub fn rough_losses(seed: u64, k: usize, t: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..t)
        .map(|_| {
            (0..k)
                .map(|_| match r.gen_range(0..6) {
                    0 => 0.0,
                    1 => 1.0,
                    2 => 0.5,
                    _ => r.gen::<f64>(),
                })
                .collect()
        })
        .collect()
}

pub fn alternating_losses(k: usize, t: usize) -> Vec<Vec<f64>> {
    (0..t)
        .map(|s| (0..k).map(|i| if (s + i) % 2 == 0 { 0.0 } else { 1.0 }).collect())
        .collect()
}

pub fn random_confidences(seed: u64, k: usize, t: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed ^ 0xc0ff);
    (0..t)
        .map(|_| {
            let mut c: Vec<f64> = (0..k)
                .map(|_| match r.gen_range(0..4) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => r.gen::<f64>(),
                })
                .collect();
            if c.iter().all(|&x| x == 0.0) {
                c[0] = 1.0;
            }
            c
        })
        .collect()
}

/// Regret statistics recomputed from the played mixtures alone.
#[derive(Debug, Default, Clone)]
pub struct Replay {
    pub regret: Vec<f64>,
    pub squared: Vec<f64>,
    pub negative: Vec<f64>,
    pub conf_regret: Vec<f64>,
    pub conf_squared: Vec<f64>,
    pub weighted_loss: Vec<f64>,
}

impl Replay {
    pub fn new(k: usize) -> Self {
        Self {
            regret: vec![0.0; k],
            squared: vec![0.0; k],
            negative: vec![0.0; k],
            conf_regret: vec![0.0; k],
            conf_squared: vec![0.0; k],
            weighted_loss: vec![0.0; k],
        }
    }

    pub fn push(&mut self, p: &[f64], losses: &[f64], conf: Option<&[f64]>) {
        let agg: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for k in 0..losses.len() {
            let r = agg - losses[k];
            let i = conf.map_or(1.0, |c| c[k]);
            self.regret[k] += r;
            self.squared[k] += r * r;
            if r < 0.0 {
                self.negative[k] -= r;
            }
            self.conf_regret[k] += i * r;
            self.conf_squared[k] += i * i * r * r;
            self.weighted_loss[k] += i * losses[k];
        }
    }
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol * b.abs().max(1.0),
        "{what}: {a} vs {b} (tol {tol})"
    );
}

pub fn assert_vec_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length");
    for (x, y) in a.iter().zip(b) {
        assert_close(*x, *y, tol, what);
    }
}

/// `C_{K,T}` written out independently of the library.
pub fn c_kt(k: usize, t: usize) -> f64 {
    let k = k as f64;
    3.0 * k.ln() + (1.0 + k / (2.0 * E) * (1.0 + (t as f64 + 1.0).ln())).ln()
}
