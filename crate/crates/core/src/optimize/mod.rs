//! Numerical optimization back-ends: scalar search, a dense simplex, and a log-barrier Newton
//! method for small smooth convex programs.

pub mod barrier;
pub mod lp;
pub mod scalar;

pub use barrier::{
    minimize_barrier, strictly_feasible_point, BarrierOptions, BarrierProblem, BarrierResult,
    Constraint, SmoothEval,
};
pub use lp::{LinearProgram, LpOutcome, Relation};
pub use scalar::{bisect_root, brent_min, brent_root, golden_section, ScalarMin};
