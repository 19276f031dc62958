//! Parameter sensitivities of stochastic reaction networks.
//!
//! The crate simulates continuous-time Markov chains given by reaction
//! networks and estimates derivatives of expectations with respect to the
//! rate parameters using likelihood ratios, pathwise differentiation of a
//! smoothed functional, finite differences of coupled paths, and a hybrid
//! of pathwise and coupled estimators built on an approximating process.

pub mod couple;
pub mod error;
pub mod estimators;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
