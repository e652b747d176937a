//! Numerical laboratory for Bohm-style quantum electrodynamics on a 1+1
//! dimensional lattice.

pub mod bohm_dynamics;
pub mod error;
pub mod fock_sectors;
pub mod lattice_core;
pub mod linalg;
pub mod locality_lab;
pub mod rng;
pub mod sea_models;
pub mod stats;

pub use error::{Error, Result};
