pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod export;
pub mod geometry;
pub mod lattice;
pub mod measures;
pub mod metrics;

pub use error::{Error, Result};
