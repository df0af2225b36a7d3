//! Experts that report a confidence `I_{k,t} ∈ [0, 1]` each round, and
//! linearization of convex losses.

mod gradient;
mod reduction;

pub use gradient::{
    aggregate_point, finite_difference_error, ConstantLoss, ConvexLoss, GradientTrick, Linearized,
    SquaredLoss,
};
pub use reduction::{redistribute, Reduction, ReductionRound};
