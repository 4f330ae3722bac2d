//! Forward Euler simulation of the incompressible semi-geostrophic equations in
//! Eulerian coordinates on a box.
//!
//! Each time step solves one variable-coefficient div-curl system for the
//! Eulerian velocity by reducing it to a scalar Neumann problem, then updates
//! the generalised geopotential directly so the transported field stays a
//! gradient.

// Negated comparisons are used on purpose so that NaN fails every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coriolis;
pub mod diagnostics;
pub mod divcurl;
pub mod grid;
pub mod stepper;
