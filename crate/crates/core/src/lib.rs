//! Quantum Fisher information of entangled coherent and NOON probes under
//! photon loss, in closed form and by numeric diagonalization in a
//! truncated two-mode Fock space.

pub mod analytic;
pub mod channels;
pub mod cli;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod states;

pub use error::{Error, Result};
