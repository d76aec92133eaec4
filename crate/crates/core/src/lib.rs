//! Energy/latency cost models, optimal weight placement and time-slice
//! simulation for heterogeneous-hybrid processing-in-memory (HH-PIM)
//! processors.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: hardware description and per-weight cost derivation.
//! - [`dp`]: the per-cluster placement DP, cross-cluster combination, the
//!   allocation LUT, an exhaustive oracle and resolution calibration.
//! - [`migration`]: transfer plans between two placements.
//! - [`sim`]: the time-slice execution model and architecture comparison.
//! - [`workload`]: model profiles and seeded arrival scenarios.
//! - [`experiment`]: glue that prepares shared grids, slice lengths and LUTs
//!   for a set of architectures running one model.

pub mod config;
pub mod dp;
pub mod error;
pub mod experiment;
pub mod migration;
pub mod model;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
