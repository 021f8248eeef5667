//! The experiment pipeline behind the command-line tool: configuration,
//! artifacts and the commands that produce them.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod prism;

pub use artifacts::{load_table, Provenance, TableSidecar};
pub use config::{CalibrationSpec, CampaignSpec, CheckSpec, ExperimentConfig};
pub use pipeline::*;
pub use prism::{export_prism, MAX_EXPORT_TRANSITIONS};
