//! Computational tools for Yamabe multiplicity on products with flat factors:
//! lattices, crystallographic groups, flat spectra, Morse-index scans and
//! covering towers.

pub mod bifurcation;
pub mod crystal;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linalg;
pub mod parallel;
pub mod scenario;
pub mod spectral;
pub mod tower;

pub use error::{Error, Result};
