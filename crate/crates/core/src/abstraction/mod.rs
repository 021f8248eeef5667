//! Finite abstraction of the closed loop: a uniform grid, interval
//! dynamics, an empirical perception-error model and the product system.

pub mod dynamics;
pub mod error_model;
pub mod grid;
pub mod system;

pub use dynamics::{
    abstract_dynamics, cartesian, count_soundness_violations, successor_cells, Interval,
    IntervalDynamics, TankIntervalDynamics,
};
pub use error_model::{estimate_error_model, ErrorBin, ErrorModel};
pub use grid::{Axis, Grid, Overlap};
pub use system::{
    build_abstract_system, build_tank_system, AbstractLayout, AbstractSystem, ControllerLogic,
    TankControllerLogic,
};
