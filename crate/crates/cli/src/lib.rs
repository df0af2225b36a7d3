//! Batch experiment runner for the `excess_agg` learners.
//!
//! [`run_experiment`] plays one learner over a generated or CSV loss
//! sequence and writes a regret trajectory, bound reports and a summary.
//! [`check_bounds_suite`] runs the randomized bound-satisfaction matrix.

pub mod csvio;
pub mod error;
pub mod experiment;
pub mod suite;

pub use error::{CliError, EXIT_INPUT, EXIT_VIOLATION};
pub use experiment::{
    generator_kind, parse_range, resolve_seed, run_experiment, ExperimentConfig,
    ExperimentOutcome, GeneratorParams, Input, LearnerKind, Summary, SEED_ENV,
};
pub use suite::{check_bounds_suite, Scale, SuiteReport};
