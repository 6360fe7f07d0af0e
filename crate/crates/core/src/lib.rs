//! Gauss–Newton methods for low-rank matrix optimization.
//!
//! The problem class is `min_{U,V} φ(A(UVᵀ) − B)` with a convex smooth loss
//! `φ`, a linear measurement map `A` and a fixed rank `r`.

pub mod direction;
pub mod io;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod operators;
pub mod problems;
pub mod rng;
pub mod selftest;
pub mod solvers;

pub use direction::{Direction, FactorPair};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SvdTriple};
pub use objectives::{LeastSquares, Problem, SmoothObjective};
pub use operators::{IndexSet, LinearOperator};
pub use solvers::{IterationTrace, SolverConfig, Status};
