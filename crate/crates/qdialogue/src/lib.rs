//! Simulator for entanglement-based quantum dialogue protocols.
//!
//! Two protocols are modeled end to end: a two-qubit EPR-pair dialogue in
//! which both parties encode message bits on one traveling qubit, and a
//! revised three-qubit GHZ dialogue that splits the traveling qubits over two
//! channels and adds a basis-correlation control mode. Pluggable eavesdropper
//! strategies act at the channel interception points, a Monte-Carlo harness
//! turns rounds into detection statistics, and an exact brute-force oracle
//! computes the reference probabilities every sampled rate is checked
//! against.

pub mod adversary;
pub mod cli;
pub mod error;
pub mod ghz_codec;
pub mod harness;
pub mod protocol;
pub mod qstate;

pub use error::{Error, Result};
