//! Quantum energy teleportation on quantum-Hall edge channels.
//!
//! A measurement of zero-point charge fluctuations on edge channel S at
//! region A is fed forward to a gate on channel P, which launches a coherent
//! charge packet. When the packet passes region B, where the channels are
//! Coulomb coupled, energy is extracted from the S vacuum if and only if the
//! packet amplitude is correlated with the measurement outcome.
//!
//! The crate computes the protocol's energies three ways:
//!
//! * closed forms ([`detector`], [`feedback`], [`coupling::eb_order_estimate`]),
//! * the first-order energy transfer as an adaptive four-dimensional
//!   integral ([`coupling::eb_quadrature`]),
//! * an exact Gaussian-state simulation of the truncated mode basis
//!   ([`gaussian_engine`], [`protocol::OracleModel`]).
//!
//! All internal quantities use natural units ħ = v_g = e = 1 with length unit
//! l (see [`units`]).

pub mod cli;
pub mod coupling;
pub mod detector;
pub mod error;
pub mod feedback;
pub mod field;
pub mod gaussian_engine;
pub mod protocol;
pub mod quadrature;
pub mod units;

pub use error::{Error, Result};

/// Crate version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
