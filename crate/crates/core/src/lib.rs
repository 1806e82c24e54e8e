//! Pseudo-spectral laboratory for the hydrostatic limit of the
//! ε-scaled anisotropic Navier-Stokes equations.
//!
//! The scaled system on `Omega = (0, L1) x (0, L2) x (-1, 1)` is integrated
//! side by side with the primitive equations (horizontal viscosity only)
//! from identical well-prepared data, and the difference is measured with
//! weighted energy-type error functionals whose decay in `eps` is fitted on
//! a log-log scale.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
mod integrator;
pub mod nse;
pub mod ops;
pub mod pe;
pub mod snapshot;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use field::{Direction, Field, Parity, Space, SurfaceField, VectorField};
pub use grid::{make_grid, Grid};
