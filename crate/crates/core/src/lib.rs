//! Vorticity-streamfunction solver for the 2D anisotropic Navier-Stokes
//! equations in a periodic channel (no-slip bottom wall, free-slip top wall),
//! its zero-vertical-viscosity limit system, pressure recovery, norm
//! diagnostics, inequality audits and the vanishing-viscosity study driver.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod snapshot;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
pub use field::{FlowState, Regime, Rep, ScalarField};
pub use grid::{build_grid, Grid};
