//! Continuous-time quantum-walk spatial search driven by a lattice Dirac
//! Hamiltonian.

pub mod clifford;
pub mod critical;
pub mod dense;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod lattice;
pub mod oracle;
pub mod predict;
pub mod quadrature;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
