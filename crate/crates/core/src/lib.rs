//! Zero-sum deterministic impulse games on a bounded box.
//!
//! The crate solves the classic double-obstacle Hamilton-Jacobi-Bellman-Isaacs
//! quasi-variational inequality by semi-Lagrangian value iteration
//! ([`solver`]), evaluates pointwise residuals of both the classic and the
//! gradient-constrained inequality ([`qvi`]), and cross-checks the solution
//! against a brute-force backward induction over explicit stage games
//! ([`oracle`]). [`trajectory`] and [`payoff`] simulate individual plays.
//!
//! Node sweeps run on rayon when the `parallel` feature is enabled (the
//! default); see [`Execution`].

pub mod compare;
pub mod config;
pub mod error;
pub mod exec;
pub mod grid;
pub mod oracle;
pub mod payoff;
pub mod problem;
pub mod qvi;
pub mod solver;
pub mod trajectory;

mod vecops;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{Grid, GridFunction};
pub use problem::{
    validate_h1, validate_h2, value_bound, ActionSet, AssumptionReport, BoxDomain, Cost, Drift,
    GameProblem, Gain, Player,
};
pub use qvi::{QviResidualReport, Region};
pub use solver::{solve_fixed_point, InitialGuess, SolveResult, SolverConfig};
pub use trajectory::{ImpulseControl, Trajectory};
