//! Models of a four-port microwave circulator built from dynamically
//! unbalanced inductance bridges.
//!
//! The crate provides three model fidelities for the same network:
//!
//! * [`freq`]: exact lumped-element scattering, computed in the rotating
//!   circular basis where the modulated network is time independent;
//! * [`io_model`]: approximate input-output (state-space) models of the
//!   resonant modes and the traveling-wave ports;
//! * [`time_domain`]: a transient simulation of the full network with ideal
//!   or SQUID-like inductance modulation.
//!
//! [`squid`] holds the junction physics, [`analysis`] the spectral
//! post-processing and parameter tuning, and [`verify`] the end-to-end
//! checks exposed by the command-line tool.

// `!(a <= b)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
mod error;
pub mod freq;
pub mod io_model;
pub mod linalg;
pub mod network;
pub mod squid;
pub mod time_domain;
pub mod verify;

pub use error::{Error, Result};
pub use network::CircuitParams;
