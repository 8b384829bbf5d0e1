//! Configuration, phantom files and result formats.

pub mod config;
pub mod formats;
pub mod phantom;

pub use config::{parse_config, ConfigFile, RunConfig};
pub use phantom::{load_phantom, parse_phantom, write_phantom, Phantom};
