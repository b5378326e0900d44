//! Viral-marketing diffusion as an SIR epidemic.
//!
//! - [`integrator`]: adaptive Dormand-Prince 5(4) and a fixed-step RK4 reference.
//! - [`sir`]: the model, threshold analysis and analytic oracles.
//! - [`campaign`]: scenarios, parameter sweeps and campaign metrics.
//! - [`io`]: config parsing, CSV and SVG output.
//! - [`check`]: the self-consistency suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod check;
pub mod integrator;
pub mod io;
pub mod sir;
