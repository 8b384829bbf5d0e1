//! Material data, scattering kernels, stopping power and the energy remapping.

mod assumptions;
mod cross_sections;
mod energy;
mod stopping;

pub use assumptions::{validate_assumptions, AssumptionCheck, AssumptionReport};
pub use cross_sections::{kernel_eval, CrossSections, KernelKind, Material};
pub use energy::EnergyMap;
pub use stopping::{moller_stopping_power, MollerParams, StoppingPower};
