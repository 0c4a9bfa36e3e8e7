//! Simulation laboratory for the MNL-Bandit problem in non-stationary
//! environments.

pub mod adversary;
pub mod environment;
pub mod error;
pub mod harness;
pub mod learner;
pub mod master;
pub mod model;
pub mod optimizer;
pub mod record;
pub mod rng;
pub mod stats;
pub mod suites;
pub mod verify;

pub use error::{Error, Result};
