//! Deterministic Boltzmann continuous slowing-down transport with an exact
//! discrete adjoint, a projected-gradient source optimizer and dose reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod adjoint;
pub mod cli;
pub mod dose;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod optimize;
pub mod physics;
pub mod quadrature;
pub mod transport;
pub mod verify;

pub use error::{Assumption, Error, Result};
pub use field::{AdjointField, Field, FieldShape, Measure, TransformedField};
pub use geometry::{Region, RegionMask, SpatialGrid};
pub use quadrature::AngularQuadrature;
pub use transport::{SolverSettings, TransportProblem};
