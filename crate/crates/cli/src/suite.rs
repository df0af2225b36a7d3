use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use excess_agg::bounds::{BoundStatus, TheoremId};
use excess_agg::learners::{Learner, MlProd};
use excess_agg::sim::{GeneratorKind, GeneratorSpec};
use excess_agg::{LearnerConfig, LossVector, MixtureVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiment::{evaluate, LearnerKind, Model, Standard};

/// Rate given to ML-Prod in injected-bug mode; the guarantee needs η ≤ 1/2.
pub const INJECTED_RATE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Small,
    Medium,
}

impl Scale {
    pub fn max_experts(self) -> usize {
        match self {
            Scale::Small => 5,
            Scale::Medium => 10,
        }
    }

    pub fn max_rounds(self) -> usize {
        match self {
            Scale::Small => 500,
            Scale::Medium => 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub seed: u64,
    pub learner: String,
    pub generator: String,
    pub experts: usize,
    pub rounds: usize,
    pub theorem: TheoremId,
    pub expert: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scale: Scale,
    pub seeds: u64,
    pub inject_bug: bool,
    pub runs: usize,
    pub checks: usize,
    pub violation_count: usize,
    pub per_theorem: BTreeMap<TheoremId, Tally>,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.violation_count > 0 {
            crate::error::EXIT_VIOLATION
        } else {
            0
        }
    }
}

/// Loss sequence that reacts to the learner: it hits expert 0 with loss 1
/// (everyone else 0) until that expert's weight drops below `lo`, then lets
/// it recover slowly with a small edge `eps` until its weight passes `hi`.
/// Against ML-Prod with η well above 1/2 this drives expert 0's regret past
/// the fixed-rate bound within a few hundred rounds.
#[derive(Debug, Clone)]
pub struct FeedbackAdversary {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    hitting: bool,
}

impl FeedbackAdversary {
    pub fn new(lo: f64, hi: f64, eps: f64) -> Self {
        Self {
            lo,
            hi,
            eps,
            hitting: true,
        }
    }

    pub fn losses(&mut self, mixture: &MixtureVector) -> LossVector {
        let p0 = mixture.weights()[0];
        if self.hitting && p0 < self.lo {
            self.hitting = false;
        } else if !self.hitting && p0 > self.hi {
            self.hitting = true;
        }
        let k = mixture.len();
        let values = if self.hitting {
            (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            (0..k)
                .map(|i| if i == 0 { 0.5 - self.eps } else { 0.5 + self.eps })
                .collect()
        };
        LossVector::new(values).expect("values in [0, 1]")
    }
}

#[derive(Default)]
struct SeedResult {
    runs: usize,
    per_theorem: BTreeMap<TheoremId, Tally>,
    violations: Vec<Violation>,
}

struct RunLabel<'a> {
    seed: u64,
    generator: &'a str,
    experts: usize,
    rounds: usize,
}

impl SeedResult {
    fn check(
        &mut self,
        model: &Model,
        config: &LearnerConfig,
        theorems: &[TheoremId],
        label: &RunLabel,
    ) -> Result<(), CliError> {
        self.runs += 1;
        for &th in theorems {
            let rep = evaluate(model, th, config, None, 0.05)?;
            if rep.status != BoundStatus::Proved {
                continue;
            }
            let tally = self.per_theorem.entry(th).or_default();
            tally.checks += 1;
            if rep.is_violation() {
                tally.violations += 1;
                let (i, slack) = rep
                    .slack
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                self.violations.push(Violation {
                    seed: label.seed,
                    learner: model_name(model),
                    generator: label.generator.to_string(),
                    experts: label.experts,
                    rounds: label.rounds,
                    theorem: th,
                    expert: rep.experts[i],
                    slack,
                });
            }
        }
        Ok(())
    }
}

fn model_name(model: &Model) -> String {
    match model {
        Model::Plain(s) => s.name().to_string(),
        Model::Hedge(_) => "mlc_hedge".into(),
        Model::Reduced(r) => format!("reduction({})", r.inner().name()),
    }
}

fn standard_theorems(kind: LearnerKind) -> &'static [TheoremId] {
    match kind {
        LearnerKind::MlProd => &[TheoremId::T1],
        LearnerKind::AdaptMlProd => &[TheoremId::T2, TheoremId::C3, TheoremId::Isel],
        LearnerKind::MlPoly => &[TheoremId::T4, TheoremId::Isel],
        LearnerKind::MlcHedge => &[TheoremId::T7],
    }
}

const STANDARD: [LearnerKind; 3] = [
    LearnerKind::MlProd,
    LearnerKind::AdaptMlProd,
    LearnerKind::MlPoly,
];

/// ML-Prod as configured for the suite; with `inject_bug` its rate bypasses
/// the η ≤ 1/2 check.
fn standard_model(kind: LearnerKind, k: usize, inject_bug: bool) -> Result<(Model, LearnerConfig), CliError> {
    let config = LearnerConfig::uniform(k);
    if kind == LearnerKind::MlProd && inject_bug {
        let rates = vec![INJECTED_RATE; k];
        let learner = MlProd::with_unchecked_rates(&config, rates.clone())?;
        return Ok((Model::Plain(Standard::MlProd(learner)), config.with_rates(rates)));
    }
    Ok((Model::new(kind, false, &config)?, config))
}

fn run_seed(seed: u64, scale: Scale, inject_bug: bool) -> Result<SeedResult, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=scale.max_experts());
    let t = rng.gen_range(10..=scale.max_rounds());
    let mut out = SeedResult::default();

    let oblivious = [
        (GeneratorKind::AdversarialRandom, k),
        (GeneratorKind::SmallLoss { epsilon: rng.gen_range(0.01..0.2) }, k),
        (GeneratorKind::GainFramed, k),
        (GeneratorKind::Identical, k),
        (GeneratorKind::Alternating, 2),
    ];
    for (kind, experts) in oblivious {
        let spec = GeneratorSpec::new(kind, experts, t, seed)?;
        for learner in STANDARD {
            let (mut model, config) = standard_model(learner, experts, inject_bug)?;
            for round in spec.iter() {
                model.step(&round.losses, None)?;
            }
            let label = RunLabel { seed, generator: spec.kind.name(), experts, rounds: t };
            out.check(&model, &config, standard_theorems(learner), &label)?;
        }
    }

    let mut lambda: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..=1.0)).collect();
    lambda[0] = 1.0;
    let with_confidences = [
        GeneratorKind::ConfidenceBernoulli { p: rng.gen_range(0.2..0.9) },
        GeneratorKind::ConfidenceScaled { lambda },
    ];
    let hedge_rates: Vec<f64> = (0..k).map(|_| [0.1, 0.3, 1.0][rng.gen_range(0..3)]).collect();
    for kind in with_confidences {
        let spec = GeneratorSpec::new(kind, k, t, seed)?;
        let label = RunLabel { seed, generator: spec.kind.name(), experts: k, rounds: t };
        let hedge_config = LearnerConfig::uniform(k).with_rates(hedge_rates.clone());
        let plain_config = LearnerConfig::uniform(k);
        let mut models = vec![
            (Model::new(LearnerKind::MlcHedge, false, &hedge_config)?, hedge_config, vec![TheoremId::T7]),
            (
                Model::new(LearnerKind::AdaptMlProd, true, &plain_config)?,
                plain_config.clone(),
                vec![TheoremId::C5, TheoremId::C3],
            ),
            (
                Model::new(LearnerKind::MlPoly, true, &plain_config)?,
                plain_config,
                vec![TheoremId::C5, TheoremId::T4],
            ),
        ];
        for round in spec.iter() {
            for (m, _, _) in models.iter_mut() {
                m.step(&round.losses, round.confidences.as_ref())?;
            }
        }
        for (m, c, th) in &models {
            out.check(m, c, th, &label)?;
        }
    }

    // two-expert feedback adversary at the full horizon of the scale
    let horizon = scale.max_rounds();
    let (lo, hi, eps) = (
        rng.gen_range(0.005..0.02),
        rng.gen_range(0.4..0.6),
        rng.gen_range(0.03..0.07),
    );
    for learner in STANDARD {
        let (mut model, config) = standard_model(learner, 2, inject_bug)?;
        let mut adversary = FeedbackAdversary::new(lo, hi, eps);
        for _ in 0..horizon {
            let p = match &model {
                Model::Plain(s) => s.predict(),
                _ => unreachable!("standard model"),
            };
            let losses = adversary.losses(&p);
            model.step(&losses, None)?;
        }
        let label = RunLabel { seed, generator: "feedback_adversary", experts: 2, rounds: horizon };
        out.check(&model, &config, standard_theorems(learner), &label)?;
    }
    Ok(out)
}

/// Runs the randomized bound-satisfaction matrix over seeds `0..seeds`:
/// standard learners on oblivious and adaptive sequences, MLC-Hedge and the
/// reduction on confidence sequences. Seeds run in parallel; the report does
/// not depend on scheduling.
pub fn check_bounds_suite(seeds: u64, scale: Scale, inject_bug: bool) -> Result<SuiteReport, CliError> {
    let next = AtomicU64::new(0);
    let results: Mutex<Vec<Option<Result<SeedResult, CliError>>>> =
        Mutex::new((0..seeds).map(|_| None).collect());
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(seeds.max(1) as usize);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let seed = next.fetch_add(1, Ordering::Relaxed);
                if seed >= seeds {
                    break;
                }
                let r = run_seed(seed, scale, inject_bug);
                results.lock().expect("no panics while holding the lock")[seed as usize] = Some(r);
            });
        }
    });

    let mut report = SuiteReport {
        scale,
        seeds,
        inject_bug,
        runs: 0,
        checks: 0,
        violation_count: 0,
        per_theorem: BTreeMap::new(),
        violations: Vec::new(),
    };
    for r in results.into_inner().expect("workers joined") {
        let r = r.expect("every seed ran")?;
        report.runs += r.runs;
        for (th, tally) in r.per_theorem {
            let e = report.per_theorem.entry(th).or_default();
            e.checks += tally.checks;
            e.violations += tally.violations;
            report.checks += tally.checks;
            report.violation_count += tally.violations;
        }
        report.violations.extend(r.violations);
    }
    Ok(report)
}
