//! Simulator and security analyzer for hybrid PQC-QKD key-distribution
//! networks.
//!
//! The crate models a two-end-user network of QKD and KEM links joined by
//! data-center relay nodes, and provides:
//!
//! - [`topology`]: network description, parsing, and validation;
//! - [`rates`]: phenomenological key-rate curves and their composition;
//! - [`field`] / [`combiners`]: finite-field arithmetic, XOR combining, and
//!   threshold secret sharing;
//! - [`protocols`]: deterministic execution of the series-relay and parallel
//!   key-distribution schemes;
//! - [`access`]: minimal access-structure enumeration and vulnerability
//!   ranking;
//! - [`switch`]: the risk-driven quantum-classical switching policy.
//!
//! Everything is deterministic given a seed: sessions, transcripts, and
//! analyses replay bit-for-bit.

pub mod access;
pub mod combiners;
pub mod field;
pub mod protocols;
pub mod rates;
pub mod switch;
pub mod topology;

pub use combiners::KeyMaterial;
pub use topology::NetworkTopology;
