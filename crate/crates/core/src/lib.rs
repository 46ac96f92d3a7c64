//! Age-structured stochastic simulation of sex ratios in a two-sex
//! population, with a deterministic life-table oracle, scenario catalog and
//! calibration.

pub mod config;
pub mod demography;
pub mod engine;
pub mod environment;
pub mod error;
pub mod model;
pub mod output;
pub mod reproduction;
pub mod rng;
pub mod scenarios;
pub mod stats;

pub use config::SimConfig;
pub use error::{Error, ParityError, Result};
