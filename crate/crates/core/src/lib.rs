//! Online aggregation of expert advice with second-order regret bounds.
//!
//! The crate provides four aggregation rules (ML-Prod, Adapt-ML-Prod,
//! ML-Poly and MLC-Hedge), a reduction that lets any standard learner handle
//! experts reporting confidences, closed-form evaluators for the matching
//! regret bounds, a martingale concentration checker and seeded generators.
//!
//! ```
//! use excess_agg::{AdaptMlProd, Learner, LearnerConfig, LossVector};
//!
//! let mut learner = AdaptMlProd::new(&LearnerConfig::uniform(2)).unwrap();
//! for t in 0..100 {
//!     let losses = if t % 2 == 0 { vec![0.0, 1.0] } else { vec![0.2, 0.6] };
//!     learner.update(&LossVector::new(losses).unwrap()).unwrap();
//! }
//! assert!(learner.predict().weights()[0] > 0.5);
//! ```

pub mod bounds;
pub mod concentration;
pub mod confidence;
pub mod error;
pub mod learners;
pub mod ledger;
pub mod sim;
pub mod types;

pub use bounds::{BoundReport, BoundStatus, TheoremId, Xi};
pub use confidence::{GradientTrick, Reduction};
pub use error::{AggError, Result};
pub use learners::{AdaptMlProd, ConfidenceLearner, Learner, MlPoly, MlProd, MlcHedge};
pub use ledger::RegretLedger;
pub use sim::{GeneratorKind, GeneratorSpec, Round};
pub use types::{ConfidenceVector, LearnerConfig, LossVector, MixtureVector, RoundOutcome};
