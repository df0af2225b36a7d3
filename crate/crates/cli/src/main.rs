use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use excess_agg::bounds::TheoremId;
use excess_agg::sim::GeneratorSpec;
use excess_agg_cli::{
    check_bounds_suite, csvio, generator_kind, parse_range, resolve_seed, run_experiment,
    CliError, ExperimentConfig, GeneratorParams, Input, LearnerKind, Scale, EXIT_INPUT,
};
use serde_json::json;

/// Online aggregation of expert advice: run learners, check regret bounds.
///
/// Without a subcommand the flags describe a single run (same as `run`).
#[derive(Parser, Debug)]
#[command(name = "excess-agg", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one learner and write trajectory.csv, bounds.json, summary.json.
    Run(RunArgs),
    /// Write a generated stream as losses.csv (and confidences.csv).
    Generate(GenerateArgs),
    /// Randomized bound-satisfaction matrix.
    Suite(SuiteArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct GeneratorArgs {
    /// Generator kind, e.g. iid_gap, adversarial_random, gain_framed.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    experts: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Falls back to EXCESS_AGG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Bernoulli means for iid_gap.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Gap for iid_gap; defaults to the gap of the means.
    #[arg(long)]
    alpha: Option<f64>,
    /// Scale of the best expert's losses for small_loss.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Activation probability for confidence_bernoulli.
    #[arg(long)]
    p: Option<f64>,
    /// Per-expert confidence scales for confidence_scaled.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "adapt_ml_prod")]
    learner: Option<LearnerKind>,
    /// Wrap the learner in the confidence reduction.
    #[arg(long)]
    reduction: bool,
    #[command(flatten)]
    gen: GeneratorArgs,
    /// Loss CSV with header expert_1,…,expert_K.
    #[arg(long, conflicts_with = "generator")]
    losses: Option<PathBuf>,
    /// Confidence CSV of the same shape.
    #[arg(long, requires = "losses")]
    confidences: Option<PathBuf>,
    /// Comma list of bound ids (T1, EQ5, EQ6, T2, C3, T4, C5, ISEL, IID, T7).
    #[arg(long, value_delimiter = ',')]
    check: Option<Vec<String>>,
    /// Range a,b of the raw file losses.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, default_value = "out")]
    out: Option<PathBuf>,
    /// Fixed rates for ml_prod or mlc_hedge: one value or one per expert.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Confidence level of the high-probability i.i.d. bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    gen: GeneratorArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    #[arg(long, value_enum, default_value = "small")]
    scale: Scale,
    /// Give ML-Prod η = 0.9, outside its guarantee; violations are expected.
    #[arg(long)]
    inject_bug: bool,
    /// Also write the full report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_spec(g: &GeneratorArgs, name: &str) -> Result<GeneratorSpec, CliError> {
    let params = GeneratorParams {
        means: g.means.clone(),
        alpha: g.alpha,
        epsilon: g.epsilon,
        p: g.p,
        lambda: g.lambda.clone(),
    };
    let experts = g
        .experts
        .or(g.means.as_ref().map(Vec::len))
        .or(g.lambda.as_ref().map(Vec::len))
        .ok_or_else(|| CliError::config("--experts is required with --generator"))?;
    let rounds = g
        .rounds
        .ok_or_else(|| CliError::config("--rounds is required with --generator"))?;
    let kind = generator_kind(name, &params, experts)?;
    Ok(GeneratorSpec::new(kind, experts, rounds, resolve_seed(g.seed)?)?)
}

fn run(args: RunArgs) -> Result<i32, CliError> {
    let seed = resolve_seed(args.gen.seed)?;
    let input = match (&args.gen.generator, &args.losses) {
        (Some(name), None) => Input::Generator(build_spec(&args.gen, name)?),
        (None, Some(losses)) => Input::Files {
            losses: losses.clone(),
            confidences: args.confidences.clone(),
        },
        _ => return Err(CliError::config("give exactly one of --generator or --losses")),
    };
    let mut config = ExperimentConfig::new(
        args.learner.unwrap_or(LearnerKind::AdaptMlProd),
        input,
        args.out.unwrap_or_else(|| PathBuf::from("out")),
    );
    config.reduction = args.reduction;
    config.seed = seed;
    config.rates = args.rates;
    config.delta = args.delta;
    config.loss_range = args.range.as_deref().map(parse_range).transpose()?;
    if matches!(config.input, Input::Files { .. }) {
        config.experts = args.gen.experts;
        config.rounds = args.gen.rounds;
    }
    config.checks = args
        .check
        .map(|ids| {
            ids.iter()
                .map(|s| TheoremId::from_str(s.trim()))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let outcome = run_experiment(&config)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
    );
    let code = outcome.exit_code();
    if code != 0 {
        let violations: Vec<_> = outcome
            .reports
            .iter()
            .filter(|r| r.is_violation())
            .map(|r| json!({ "theorem": r.theorem, "min_slack": r.min_slack() }))
            .collect();
        eprintln!(
            "{}",
            json!({ "error": "bound_violation", "message": "a proved bound is violated", "violations": violations })
        );
    }
    Ok(code)
}

fn generate(args: GenerateArgs) -> Result<i32, CliError> {
    let name = args
        .gen
        .generator
        .as_deref()
        .ok_or_else(|| CliError::config("--generator is required"))?;
    let spec = build_spec(&args.gen, name)?;
    std::fs::create_dir_all(&args.out)?;
    let rounds: Vec<_> = spec.iter().collect();
    let losses_path = args.out.join("losses.csv");
    csvio::write_matrix(&losses_path, spec.experts, rounds.iter().map(|r| r.losses.raw()))?;
    let mut written = json!({ "losses": losses_path, "range": spec.loss_range() });
    if spec.kind.emits_confidences() {
        let path = args.out.join("confidences.csv");
        csvio::write_matrix(
            &path,
            spec.experts,
            rounds
                .iter()
                .map(|r| r.confidences.as_ref().expect("emitted").values()),
        )?;
        written["confidences"] = json!(path);
    }
    println!("{written}");
    Ok(0)
}

fn suite(args: SuiteArgs) -> Result<i32, CliError> {
    let report = check_bounds_suite(args.seeds, args.scale, args.inject_bug)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{text}\n"))?;
    }
    println!(
        "{}",
        json!({
            "scale": report.scale,
            "seeds": report.seeds,
            "inject_bug": report.inject_bug,
            "runs": report.runs,
            "checks": report.checks,
            "violations": report.violation_count,
            "per_theorem": report.per_theorem,
        })
    );
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Run(a)) => run(a),
        Some(Command::Generate(a)) => generate(a),
        Some(Command::Suite(a)) => suite(a),
        None => run(cli.run),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
