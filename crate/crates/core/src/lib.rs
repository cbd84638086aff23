//! Equilibrium learning for simultaneous-move stochastic games.
//!
//! The crate pairs every learning component with an exact oracle:
//! sampled regret matching against a simplex minimax solver, tabular Nash
//! value iteration against backward induction, and approximated double
//! oracle action discovery against exhaustive best responses.

pub mod dnvi;
pub mod error;
pub mod eval;
pub mod explore;
pub mod matrix;
pub mod microdip;
pub mod proposal;
pub mod rng;
pub mod runner;
pub mod scalar;
pub mod stogame;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working scalar for tables, environments and evaluation.
pub type Real = f64;
pub type Strategy = matrix::MixedStrategy<Real>;
pub type StageGame = matrix::RestrictedStageGame<Real>;
pub type Equilibrium = matrix::EquilibriumResult<Real>;
pub type ExactStageGame = matrix::RestrictedStageGame<num_rational::BigRational>;
pub type CompactStageGame = matrix::RestrictedStageGame<f32>;
