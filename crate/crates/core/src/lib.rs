//! Convex duality for expected utility maximization: Orlicz-space tools, finite-state
//! primal/dual solvers with corner-solution diagnostics, and two worked infinite-state models
//! (a Lévy corner solution and a market with a utility gap under economic closure).
//!
//! Everything is generic over [`Scalar`]; the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod convex;
pub mod error;
pub mod extended;
pub mod gap;
pub mod levy;
pub mod linalg;
pub mod market;
pub mod optimize;
pub mod orlicz;
pub mod quadrature;
pub mod scalar;
pub mod utility;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Utility = utility::UtilitySpec<f64>;
pub type Market = market::FiniteMarket<f64>;
pub type Primal = market::PrimalSolution<f64>;
pub type Dual = market::DualSolution<f64>;
pub type YoungFn = orlicz::Young<f64>;
pub type FiniteVariable = orlicz::FiniteRandomVariable<f64>;
pub type Grid = convex::GridFunction<f64>;
pub type Levy = levy::LevyModel<f64>;
pub type Gap = gap::GapMarket<f64>;
pub type Extended = extended::ExtReal<f64>;
