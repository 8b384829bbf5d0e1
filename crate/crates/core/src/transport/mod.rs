//! Forward transport: upwind sweeps, source iteration and the implicit
//! march in the remapped energy variable.

mod oracle;
mod residual;
mod scatter;
mod solver;
mod sweep;

pub use oracle::{free_streaming_oracle, path_length};
pub use residual::{pde_residual, stencil_source, transformed_residual};
pub use scatter::{apply_scattering, ScatteringOperator};
pub use solver::{Sense, SolverSettings, TransportProblem};
pub use sweep::{apply_streaming, sweep_one_direction, Inflow};
