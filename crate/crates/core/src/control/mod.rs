//! Shaping the input pulse through the control `u(t)`.
//!
//! For every control the zero dynamics give an exactly absorbed pulse, so the
//! optimizer only has to make that pulse look good. The cost rewards a single
//! rising-then-falling hump around `t2` and penalizes control energy and the
//! residual state `x(t0)` (which must vanish for the photon to have started
//! outside the memory).

mod cost;
mod line_search;
mod optimize;
mod problem;
mod realsplit;

pub use cost::{hamilton_du, hamilton_function, running_cost, step_weight, CostWeights, EXP_CLAMP};
pub use line_search::{wolfe_search, LineSearchOptions, LineSearchOutcome, LineTrial};
pub use optimize::{
    default_t2_candidates, optimize, select_t2, OptimizationResult, OptimizeOptions, T2Selection, TerminationReason,
};
pub use problem::{AdjointTrajectory, CostBreakdown, Evaluation, TransferProblem};
pub use realsplit::{RealSplit, RealState, RealTrajectory};
