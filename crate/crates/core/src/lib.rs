//! Simulation and security analysis of a multi-party semi-quantum secret
//! sharing scheme: a quantum dealer distributes a chosen secret to `n`
//! classical parties through `(n+1)`-qubit GHZ states, measure-flip and
//! reflect operations, and decoy-photon eavesdropping checks.

pub mod adversary;
pub mod analysis;
pub mod config;
pub mod error;
pub mod protocol;
pub mod quantum;
pub mod seed;

pub use error::{Error, Result};
