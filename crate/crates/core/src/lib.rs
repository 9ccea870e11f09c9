//! Simulation and theory toolkit for Generalized Local SGD.
//!
//! Each of `M` nodes runs `H` steps of SGD from the shared point `x_r`; the
//! averaged displacement is handed to an outer optimizer with its own
//! learning rate `gamma`. Besides the simulator ([`engine`]) and the outer
//! update rules ([`outer`]), the crate evaluates explicit-constant
//! convergence bounds ([`theory`]), solves for optimal `(eta, gamma)` pairs
//! ([`tuner`]) and computes drift / similarity diagnostics ([`diagnostics`]).

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod outer;
pub mod problems;
pub mod rng;
pub mod roots;
pub mod theory;
pub mod tuner;

pub use engine::{run, run_with_noise, RecordLevel, RoundTrace, RunConfig, RunResult};
pub use error::{Error, Result};
pub use outer::{OuterKind, OuterOptimizerSpec, OuterState};
pub use problems::{NoiseModel, NoiseScaling, QuadraticProblem};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
