//! Weight normalization and reparametrized projected gradient descent on
//! overparametrized least squares and low-rank matrix sensing.
//!
//! The crate covers discrete steppers and schedules, the continuous-time
//! flow shared by both reparametrizations, checkers for the closed-form
//! identities along their trajectories, and seeded experiment sweeps.

pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod general_loss;
pub mod generate;
pub mod ode;
pub mod optimizers;
pub mod problem;
pub mod rng;
pub mod sensing;

pub use error::{Error, Result};
pub use problem::{build_problem, Decomposition, LinearProblem, MinNormSolution};
