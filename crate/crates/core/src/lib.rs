pub mod abstraction;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model_check;
pub mod monitor;
pub mod numfmt;
pub mod pa;
pub mod watertank;

pub use error::{Error, ErrorKind, Result};
