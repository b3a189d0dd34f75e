//! Exact measurable dynamics toolkit.
//!
//! Bernoulli shifts, nonsingular rank-one cutting-and-stacking
//! transformations and their finite products, with time-restricted
//! sensitivity checks, explicit failure witnesses, and entropy estimators.
//! Ball measures and interval endpoints are exact rationals wherever the
//! construction allows; everything sampled is deterministic per seed.

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod rank_one;
pub mod rational;
pub mod report;
pub mod runner;
pub mod sensitivity;
pub mod shift;
pub mod system;

pub use error::{Error, Result};
