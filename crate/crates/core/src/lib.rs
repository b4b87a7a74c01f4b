//! Unit tests for stochastic optimization algorithms.
//!
//! One-dimensional prototype losses are concatenated from shape pieces,
//! combined into multi-dimensional tests, perturbed with gradient noise,
//! curl and non-stationarity, and used to score a grid of optimizer setups
//! against tuned SGD.

pub mod compose;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod jsonf64;
pub mod landscape;
pub mod optimizers;
pub mod reference_landscapes;
pub mod report;
pub mod stochastic;

pub use error::{Error, Result};
