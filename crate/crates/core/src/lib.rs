//! Solvers and verification tools for singular degenerate elliptic operator
//! equations on rectangles.
//!
//! The degenerate coordinate `x ∈ (0, a]` is mapped to `y ∈ (-∞, 0]`, where
//! the equations become uniformly elliptic, truncated, and discretized with
//! second-order finite differences.

pub mod cli;
pub mod config;
pub mod error;
pub mod funcdsl;
pub mod linalg;
pub mod mesh;
pub mod nonlinear;
pub mod opspace;
pub mod reference;
pub mod solve1d;
pub mod solve2d;
pub mod suite;
pub mod sysinf;
pub mod verify;

pub use error::{Error, Result};
