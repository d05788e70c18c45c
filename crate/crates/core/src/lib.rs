//! Simulation and analysis toolkit for the symbiotic contact process.
//!
//! * [`model`]: site states, parameters and the lattice box.
//! * [`random`]: seeded per-clock streams of the graphical representation.
//! * [`engine`]: exact event-driven simulation, survival estimates, decay
//!   fits, slab counts and stirred-process densities.

pub mod bounds;
pub mod engine;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod parallel;
pub mod pde;
pub mod random;
pub mod sbvm;
pub mod stats;

pub use error::{Error, Result};
