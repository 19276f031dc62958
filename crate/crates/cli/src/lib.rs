//! Library side of the `ctmc-sens` command: experiment configs, the run
//! driver, exhibit reproduction and oracle verification.

pub mod config;
pub mod exec;
pub mod reproduce;
pub mod verify;

pub use config::{ExperimentConfig, Method, Resolved};
pub use exec::{execute, exit_code};
