//! Steady incompressible Navier–Stokes on channel-junction domains.
//!
//! The pipeline: validate a rectilinear domain, build exact Couette–Poiseuille
//! flows in its outlets, extend the boundary data by a divergence-free carrier,
//! solve on growing truncations, and measure energies and asymptotics.

// `!(x > 0.0)` is used on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carrier;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod invading;
pub mod ops;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
