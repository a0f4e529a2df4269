//! Transcorrelated Hubbard Hamiltonians and ansatz-based imaginary time
//! evolution on a state-vector simulator.

pub mod circuits;
pub mod error;
pub mod fermion;
pub mod gradient;
pub mod jastrow;
pub mod lattice;
pub mod oracle;
pub mod pauli;
pub mod qite;
pub mod runner;
pub mod simulator;
pub mod state;

pub use error::{Error, Result};
