//! Car-following model toolkit: five classical laws (GHR, Gipps, IDM, FVD,
//! Wiedemann 99), a forward-Euler replay simulator, spacing-based
//! goodness-of-fit measures, a real-coded genetic algorithm and the
//! cross-validation workflows built on top of them.

pub mod config;
pub mod error;
pub mod ga;
pub mod models;
pub mod objective;
pub mod report;
pub mod simulator;
pub mod trajectory;
pub mod workflow;

pub use error::{Error, Result};
