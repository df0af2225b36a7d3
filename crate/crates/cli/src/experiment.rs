use std::fs;
use std::path::{Path, PathBuf};

use excess_agg::bounds::{
    self, bound_iid, c_kt, xi_adapt_ml_prod, xi_ml_poly, BoundReport, TheoremId, Xi,
};
use excess_agg::confidence::Reduction;
use excess_agg::learners::{AdaptMlProd, ConfidenceLearner, Learner, MlPoly, MlProd, MlcHedge};
use excess_agg::sim::{GeneratorKind, GeneratorSpec, Round};
use excess_agg::{
    AggError, ConfidenceVector, LearnerConfig, LossVector, MixtureVector, RegretLedger,
    RoundOutcome,
};
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{CliError, EXIT_VIOLATION};

/// Environment variable read when no seed is given on the command line.
pub const SEED_ENV: &str = "EXCESS_AGG_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LearnerKind {
    MlProd,
    AdaptMlProd,
    MlPoly,
    MlcHedge,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::MlProd => "ml_prod",
            LearnerKind::AdaptMlProd => "adapt_ml_prod",
            LearnerKind::MlPoly => "ml_poly",
            LearnerKind::MlcHedge => "mlc_hedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Generator(GeneratorSpec),
    Files {
        losses: PathBuf,
        confidences: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    /// Wrap a standard learner in the confidence reduction.
    pub reduction: bool,
    pub input: Input,
    /// Declared range of raw file losses; generators carry their own.
    pub loss_range: Option<(f64, f64)>,
    /// Bounds to evaluate; `None` means every bound that applies.
    pub checks: Option<Vec<TheoremId>>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub rates: Option<Vec<f64>>,
    /// Confidence level for the high-probability i.i.d. bound.
    pub delta: f64,
    /// Expected shape of file input, if the caller states one.
    pub experts: Option<usize>,
    pub rounds: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(learner: LearnerKind, input: Input, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            learner,
            reduction: false,
            input,
            loss_range: None,
            checks: None,
            output_dir: output_dir.into(),
            seed: 0,
            rates: None,
            delta: 0.05,
            experts: None,
            rounds: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.reduction && self.learner == LearnerKind::MlcHedge {
            return Err(CliError::config(
                "--reduction needs a standard inner learner; mlc_hedge already takes confidences",
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AggError::DeltaOutOfRange(self.delta).into());
        }
        let takes_confidences = self.reduction || self.learner == LearnerKind::MlcHedge;
        match &self.input {
            Input::Generator(spec) => {
                spec.validate()?;
                if let Some(r) = self.loss_range {
                    if r != spec.loss_range() {
                        return Err(CliError::config(format!(
                            "--range applies to file input; generator {} emits losses in {:?}",
                            spec.kind.name(),
                            spec.loss_range()
                        )));
                    }
                }
                if spec.kind.emits_confidences() && !takes_confidences {
                    return Err(CliError::config(format!(
                        "generator {} emits confidences; use mlc_hedge or --reduction",
                        spec.kind.name()
                    )));
                }
            }
            Input::Files { confidences, .. } => {
                if confidences.is_some() && !takes_confidences {
                    return Err(CliError::config(
                        "--confidences needs mlc_hedge or --reduction",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `--seed` if given, else [`SEED_ENV`], else 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(0),
    }
}

/// Parses `a,b` into a loss range.
pub fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::config(format!("--range expects a,b with a < b, got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Generator parameters as given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratorParams {
    pub means: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub p: Option<f64>,
    pub lambda: Option<Vec<f64>>,
}

pub const GENERATOR_NAMES: [&str; 8] = [
    "iid_gap",
    "adversarial_random",
    "alternating",
    "small_loss",
    "gain_framed",
    "identical",
    "confidence_bernoulli",
    "confidence_scaled",
];

/// Builds a generator kind. `iid_gap` takes its gap from the means when
/// `alpha` is not given; `confidence_scaled` defaults to unit scales.
pub fn generator_kind(
    name: &str,
    params: &GeneratorParams,
    experts: usize,
) -> Result<GeneratorKind, CliError> {
    Ok(match name {
        "iid_gap" => {
            let means = params
                .means
                .clone()
                .ok_or_else(|| CliError::config("iid_gap needs --means"))?;
            let alpha = match params.alpha {
                Some(a) => a,
                None => {
                    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
                    let mut others = means.iter().filter(|&&m| m != best);
                    let gap = others.clone().map(|m| m - best).fold(f64::INFINITY, f64::min);
                    if others.next().is_none() || means.iter().filter(|&&m| m == best).count() > 1 {
                        return Err(CliError::config("iid_gap needs a unique best mean"));
                    }
                    gap
                }
            };
            GeneratorKind::IidGap { means, alpha }
        }
        "adversarial_random" => GeneratorKind::AdversarialRandom,
        "alternating" => GeneratorKind::Alternating,
        "small_loss" => GeneratorKind::SmallLoss {
            epsilon: params.epsilon.unwrap_or(0.05),
        },
        "gain_framed" => GeneratorKind::GainFramed,
        "identical" => GeneratorKind::Identical,
        "confidence_bernoulli" => GeneratorKind::ConfidenceBernoulli {
            p: params.p.unwrap_or(0.5),
        },
        "confidence_scaled" => GeneratorKind::ConfidenceScaled {
            lambda: params.lambda.clone().unwrap_or_else(|| vec![1.0; experts]),
        },
        other => {
            return Err(CliError::config(format!(
                "unknown generator {other:?}; expected one of {}",
                GENERATOR_NAMES.join(", ")
            )))
        }
    })
}

/// The standard-setting learners.
#[derive(Debug, Clone)]
pub enum Standard {
    MlProd(MlProd),
    Adapt(AdaptMlProd),
    Poly(MlPoly),
}

impl Standard {
    pub fn new(kind: LearnerKind, config: &LearnerConfig) -> Result<Self, CliError> {
        Ok(match kind {
            LearnerKind::MlProd => Standard::MlProd(MlProd::new(config)?),
            LearnerKind::AdaptMlProd => Standard::Adapt(AdaptMlProd::new(config)?),
            LearnerKind::MlPoly => Standard::Poly(MlPoly::new(config)?),
            LearnerKind::MlcHedge => {
                return Err(CliError::config("mlc_hedge is not a standard learner"))
            }
        })
    }

    /// `(Ξ₁, Ξ₂)` at horizon `t`, for the learners that have them.
    pub fn xi(&self, k: usize, t: u64) -> Option<Xi> {
        match self {
            Standard::MlProd(_) => None,
            Standard::Adapt(_) => xi_adapt_ml_prod(k, t).ok(),
            Standard::Poly(_) => xi_ml_poly(k, t).ok(),
        }
    }

    fn as_learner(&self) -> &dyn Learner {
        match self {
            Standard::MlProd(l) => l,
            Standard::Adapt(l) => l,
            Standard::Poly(l) => l,
        }
    }

    fn as_learner_mut(&mut self) -> &mut dyn Learner {
        match self {
            Standard::MlProd(l) => l,
            Standard::Adapt(l) => l,
            Standard::Poly(l) => l,
        }
    }
}

impl Learner for Standard {
    fn name(&self) -> &'static str {
        self.as_learner().name()
    }

    fn expert_count(&self) -> usize {
        self.as_learner().expert_count()
    }

    fn predict(&self) -> MixtureVector {
        self.as_learner().predict()
    }

    fn update(&mut self, losses: &LossVector) -> excess_agg::Result<RoundOutcome> {
        self.as_learner_mut().update(losses)
    }

    fn ledger(&self) -> &RegretLedger {
        self.as_learner().ledger()
    }
}

/// A learner ready to run, in one of the three shapes the runner supports.
#[derive(Debug, Clone)]
pub enum Model {
    Plain(Standard),
    Hedge(MlcHedge),
    Reduced(Reduction<Standard>),
}

impl Model {
    pub fn new(kind: LearnerKind, reduction: bool, config: &LearnerConfig) -> Result<Self, CliError> {
        Ok(match (kind, reduction) {
            (LearnerKind::MlcHedge, false) => Model::Hedge(MlcHedge::new(config)?),
            (LearnerKind::MlcHedge, true) => {
                return Err(CliError::config("mlc_hedge cannot be wrapped in the reduction"))
            }
            (k, false) => Model::Plain(Standard::new(k, config)?),
            (k, true) => Model::Reduced(Reduction::new(Standard::new(k, config)?)),
        })
    }

    pub fn expert_count(&self) -> usize {
        match self {
            Model::Plain(s) => s.expert_count(),
            Model::Hedge(h) => ConfidenceLearner::expert_count(h),
            Model::Reduced(r) => r.expert_count(),
        }
    }

    /// Plays one round. Missing confidences mean every expert is fully active.
    pub fn step(
        &mut self,
        losses: &LossVector,
        confidences: Option<&ConfidenceVector>,
    ) -> Result<RoundOutcome, CliError> {
        let ones;
        let conf = match confidences {
            Some(c) => c,
            None => {
                ones = ConfidenceVector::ones(losses.len());
                &ones
            }
        };
        Ok(match self {
            Model::Plain(s) => s.update(losses)?,
            Model::Hedge(h) => h.step(losses, conf)?,
            Model::Reduced(r) => r.step(losses, conf)?,
        })
    }

    /// Ledger on the original losses, with confidence regret where it applies.
    pub fn ledger(&self) -> &RegretLedger {
        match self {
            Model::Plain(s) => s.ledger(),
            Model::Hedge(h) => ConfidenceLearner::ledger(h),
            Model::Reduced(r) => r.ledger(),
        }
    }

    /// The standard learner and the ledger its own bounds refer to. Under the
    /// reduction that is the inner learner on the modified losses.
    pub fn standard(&self) -> Option<(&Standard, &RegretLedger)> {
        match self {
            Model::Plain(s) => Some((s, s.ledger())),
            Model::Reduced(r) => Some((r.inner(), r.inner().ledger())),
            Model::Hedge(_) => None,
        }
    }

    pub fn xi(&self) -> Option<Xi> {
        let k = self.expert_count();
        let t = self.ledger().round_count;
        self.standard().and_then(|(s, _)| s.xi(k, t))
    }

    fn describe(&self) -> String {
        match self {
            Model::Plain(s) => s.name().to_string(),
            Model::Hedge(_) => "mlc_hedge".to_string(),
            Model::Reduced(r) => format!("reduction({})", r.inner().name()),
        }
    }
}

/// The i.i.d. setting: best expert and gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidSetting {
    pub best: usize,
    pub alpha: f64,
}

/// Bounds that apply to `model`, proved ones first.
pub fn default_checks(model: &Model, iid: Option<IidSetting>) -> Vec<TheoremId> {
    let multi = model.expert_count() >= 2;
    let mut out = Vec::new();
    match model.standard() {
        Some((s, _)) => {
            match s {
                Standard::MlProd(_) => out.extend([TheoremId::T1, TheoremId::Eq5]),
                Standard::Adapt(_) => {
                    out.push(TheoremId::T2);
                    if multi {
                        out.push(TheoremId::C3);
                    }
                }
                Standard::Poly(_) => out.push(TheoremId::T4),
            }
            let has_xi = multi && !matches!(s, Standard::MlProd(_));
            if has_xi {
                out.push(TheoremId::Isel);
                if matches!(model, Model::Reduced(_)) {
                    out.push(TheoremId::C5);
                }
                if iid.is_some() {
                    out.push(TheoremId::Iid);
                }
            }
            out.push(TheoremId::Eq6);
        }
        None => out.push(TheoremId::T7),
    }
    out
}

/// Evaluates one bound on a finished run.
pub fn evaluate(
    model: &Model,
    theorem: TheoremId,
    config: &LearnerConfig,
    iid: Option<IidSetting>,
    delta: f64,
) -> Result<BoundReport, CliError> {
    let na = |why: &str| {
        CliError::config(format!("{theorem} does not apply to {}: {why}", model.describe()))
    };
    let xi = || model.xi().ok_or_else(|| na("needs a learner with (Ξ₁, Ξ₂) and K ≥ 2"));
    let priors = config.priors()?;
    if theorem == TheoremId::T7 {
        return match model {
            Model::Hedge(h) => Ok(bounds::bound_mlc_hedge(ConfidenceLearner::ledger(h), config)?),
            _ => Err(na("mlc_hedge only")),
        };
    }
    if theorem == TheoremId::C5 {
        return match model {
            Model::Reduced(r) => Ok(bounds::bound_corollary5(r.ledger(), xi()?)?),
            _ => Err(na("needs --reduction")),
        };
    }
    let (s, ledger) = model.standard().ok_or_else(|| na("needs a standard learner"))?;
    let report = match (theorem, s) {
        (TheoremId::T1, Standard::MlProd(l)) => {
            let cfg = config.clone().with_rates(l.rates().to_vec());
            bounds::bound_theorem1(ledger, &cfg)?
        }
        (TheoremId::Eq5, Standard::MlProd(_)) => bounds::bound_eq5(ledger, &priors)?,
        (TheoremId::T2, Standard::Adapt(l)) => bounds::bound_theorem2(ledger, &l.bound_terms())?,
        (TheoremId::C3, Standard::Adapt(_)) => bounds::bound_corollary3(ledger, &priors)?,
        (TheoremId::T4, Standard::Poly(_)) => bounds::bound_theorem4(ledger)?,
        (TheoremId::Eq6, _) => bounds::bound_variance(ledger, &priors, model.xi())?,
        (TheoremId::Isel, _) => bounds::bound_small_excess(ledger, xi()?)?,
        (TheoremId::Iid, _) => {
            let setting = iid.ok_or_else(|| na("needs the iid_gap generator"))?;
            bounds::bound_iid_report(ledger, xi()?, setting.best, setting.alpha, delta)?
        }
        _ => return Err(na("wrong learner")),
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidSummary {
    pub best_expert: usize,
    pub alpha: f64,
    pub delta: f64,
    pub regret: f64,
    pub expected_constant: f64,
    pub high_probability_bound: f64,
    pub below_expected_constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub learner: LearnerKind,
    pub reduction: bool,
    pub generator: Option<String>,
    pub seed: u64,
    pub experts: usize,
    pub rounds: u64,
    pub loss_range: (f64, f64),
    /// Cumulative losses on the rescaled `[0, 1]` scale.
    pub learner_loss: f64,
    pub expert_loss: Vec<f64>,
    pub final_regret: Vec<f64>,
    /// Regret in the units of the raw input.
    pub final_regret_original: Vec<f64>,
    pub final_confidence_regret: Vec<f64>,
    /// Expert with the smallest cumulative loss.
    pub best_expert: usize,
    pub c_kt: Option<f64>,
    pub xi: Option<Xi>,
    pub iid: Option<IidSummary>,
    pub checked: Vec<TheoremId>,
    pub violated: Vec<TheoremId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub summary: Summary,
    pub reports: Vec<BoundReport>,
}

impl ExperimentOutcome {
    /// 0 when every proved bound holds, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.reports.iter().any(BoundReport::is_violation) {
            EXIT_VIOLATION
        } else {
            0
        }
    }
}

struct Stream<'a> {
    experts: usize,
    range: (f64, f64),
    rounds: Box<dyn Iterator<Item = Round> + 'a>,
}

fn open_stream(config: &ExperimentConfig) -> Result<Stream<'_>, CliError> {
    match &config.input {
        Input::Generator(spec) => Ok(Stream {
            experts: spec.experts,
            range: spec.loss_range(),
            rounds: Box::new(spec.iter()),
        }),
        Input::Files { losses, confidences } => {
            let range = config.loss_range.unwrap_or((0.0, 1.0));
            let rows = csvio::read_losses(losses, range)?;
            let k = rows[0].len();
            if let Some(e) = config.experts {
                if e != k {
                    return Err(CliError::config(format!(
                        "--experts {e} but {} has {k} columns",
                        losses.display()
                    )));
                }
            }
            if let Some(t) = config.rounds {
                if t != rows.len() {
                    return Err(CliError::config(format!(
                        "--rounds {t} but {} has {} rows",
                        losses.display(),
                        rows.len()
                    )));
                }
            }
            let conf = match confidences {
                Some(path) => {
                    let c = csvio::read_confidences(path)?;
                    if c.len() != rows.len() || c[0].len() != k {
                        return Err(CliError::File {
                            path: path.display().to_string(),
                            message: format!(
                                "shape {}x{} does not match losses {}x{k}",
                                c.len(),
                                c[0].len(),
                                rows.len()
                            ),
                        });
                    }
                    c.into_iter().map(Some).collect()
                }
                None => vec![None; rows.len()],
            };
            let rounds = rows
                .into_iter()
                .zip(conf)
                .map(|(losses, confidences)| Round { losses, confidences });
            Ok(Stream {
                experts: k,
                range,
                rounds: Box::new(rounds),
            })
        }
    }
}

/// Runs one experiment and writes `trajectory.csv`, `bounds.json` and
/// `summary.json` to the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    config.validate()?;
    let stream = open_stream(config)?;
    let k = stream.experts;
    let mut learner_config = LearnerConfig::uniform(k);
    learner_config.seed = Some(config.seed);
    if let Some(r) = &config.rates {
        learner_config = match r.len() {
            1 => learner_config.with_constant_rate(r[0]),
            _ => learner_config.with_rates(r.clone()),
        };
    }
    let mut model = Model::new(config.learner, config.reduction, &learner_config)?;

    fs::create_dir_all(&config.output_dir)?;
    let mut trajectory = TrajectoryWriter::create(&config.output_dir.join("trajectory.csv"), k)?;
    for round in stream.rounds {
        if round.losses.len() != k {
            return Err(AggError::DimensionMismatch { expected: k, found: round.losses.len() }.into());
        }
        let outcome = model.step(&round.losses, round.confidences.as_ref())?;
        trajectory.push(outcome.aggregate_loss, model.ledger())?;
    }
    trajectory.finish()?;

    let iid = match &config.input {
        Input::Generator(spec) => match &spec.kind {
            GeneratorKind::IidGap { alpha, .. } => spec.best_expert().map(|best| IidSetting {
                best,
                alpha: *alpha,
            }),
            _ => None,
        },
        Input::Files { .. } => None,
    };
    let checks = config
        .checks
        .clone()
        .unwrap_or_else(|| default_checks(&model, iid));
    let reports = checks
        .iter()
        .map(|&th| evaluate(&model, th, &learner_config, iid, config.delta))
        .collect::<Result<Vec<_>, _>>()?;
    write_json(&config.output_dir.join("bounds.json"), &reports)?;

    let ledger = model.ledger();
    let t = ledger.round_count;
    let xi = model.xi();
    let iid_summary = match (iid, xi) {
        (Some(s), Some(xi)) => {
            let b = bound_iid(xi, (k as f64).ln(), s.alpha, Some(config.delta))?;
            let regret = ledger.cumulative_regret[s.best];
            Some(IidSummary {
                best_expert: s.best,
                alpha: s.alpha,
                delta: config.delta,
                regret,
                expected_constant: b.expected,
                high_probability_bound: b.high_probability.expect("delta given"),
                below_expected_constant: regret <= b.expected,
            })
        }
        _ => None,
    };
    let summary = Summary {
        learner: config.learner,
        reduction: config.reduction,
        generator: match &config.input {
            Input::Generator(spec) => Some(spec.kind.name().to_string()),
            Input::Files { .. } => None,
        },
        seed: config.seed,
        experts: k,
        rounds: t,
        loss_range: stream.range,
        learner_loss: ledger.learner_loss,
        expert_loss: ledger.expert_loss.clone(),
        final_regret: ledger.cumulative_regret.clone(),
        final_regret_original: ledger.cumulative_regret_original.clone(),
        final_confidence_regret: ledger.confidence_regret.clone(),
        best_expert: ledger.best_expert(),
        c_kt: (k >= 2).then(|| c_kt(k, t)),
        xi,
        iid: iid_summary,
        checked: checks,
        violated: reports
            .iter()
            .filter(|r| r.is_violation())
            .map(|r| r.theorem)
            .collect(),
    };
    write_json(&config.output_dir.join("summary.json"), &summary)?;
    Ok(ExperimentOutcome { summary, reports })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Per-round plot data: `t, aggregate_loss, regret_k…, confidence_regret_k…`.
struct TrajectoryWriter {
    writer: csv::Writer<fs::File>,
    t: u64,
    path: PathBuf,
}

impl TrajectoryWriter {
    fn create(path: &Path, k: usize) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        let mut head = vec!["t".to_string(), "aggregate_loss".to_string()];
        head.extend((1..=k).map(|i| format!("regret_{i}")));
        head.extend((1..=k).map(|i| format!("confidence_regret_{i}")));
        writer.write_record(&head).map_err(|e| io_err(path, e))?;
        Ok(Self {
            writer,
            t: 0,
            path: path.to_path_buf(),
        })
    }

    fn push(&mut self, aggregate_loss: f64, ledger: &RegretLedger) -> Result<(), CliError> {
        self.t += 1;
        let mut row = vec![self.t.to_string(), aggregate_loss.to_string()];
        row.extend(ledger.cumulative_regret.iter().map(f64::to_string));
        row.extend(ledger.confidence_regret.iter().map(f64::to_string));
        self.writer
            .write_record(&row)
            .map_err(|e| io_err(&self.path, e))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

fn io_err(path: &Path, e: csv::Error) -> CliError {
    CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
