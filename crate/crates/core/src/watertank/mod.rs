//! The J-tank case study: dynamics, noisy sensing, Bayesian filtering,
//! hysteresis control and seeded trials.

pub mod controller;
pub mod dynamics;
pub mod filter;
pub mod params;
pub mod trial;

pub use controller::{control, control_outcomes, next_requests, ControlConfig};
pub use dynamics::{sense, step_dynamics, StepOutcome};
pub use filter::{filter_update, FilterState, TankFilter, UpdateStatus};
pub use params::{SafetyReading, TankParams};
pub use trial::{run_trial, sample_initial_levels, trial_rng, MonitorOutputs, TimestepRecord, TrialTrace};
