//! Tracking functional, adjoint gradient and the projected-gradient loop.

mod objective;
mod projected;

pub use objective::{
    alpha1_from_regions, angular_mean_residual, evaluate, gradient, isotropic_target, kkt_residual, objective,
    project_admissible, Evaluation, ObjectiveConfig, ObjectiveKind,
};
pub use projected::{optimize_projected_gradient, HistoryEntry, OptResult, OptState, OptimizerSettings};
