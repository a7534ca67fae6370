//! Hybrid quantum-classical reservoir computer.

pub mod cli;
pub mod config;
pub mod encoding;
pub mod error;
pub mod forecast;
pub mod mc;
pub mod narma;
pub mod pipeline;
pub mod quantum;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod sim_check;
pub mod stats;
pub mod topology;

pub use error::{Error, Result};
