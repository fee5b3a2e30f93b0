//! Simulation and global-existence certificates for a three-component
//! activator-inhibitor reaction-diffusion system with zero-flux boundaries.
//!
//! The crate is organised bottom-up: [`model`] holds parameters and reaction
//! terms, [`grid`] the spatial discretization, [`integrator`] the time
//! stepping, [`certificate`] the constants of the boundedness argument,
//! [`monitor`] the diagnostics along a run and [`oracles`] independent
//! brute-force checks. [`cli`] implements the `gm3` command-line tool.

pub mod certificate;
pub mod cli;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod monitor;
pub mod oracles;
pub mod snapshot;
pub mod tridiag;

pub use error::{Error, Result};
