//! Avoided-crossing detection in parametric spectra through the fidelity change.

pub mod bose_hubbard;
pub mod cli;
pub mod error;
pub mod fidelity;
pub mod hamiltonian;
pub mod matrix;
pub mod rmt;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
