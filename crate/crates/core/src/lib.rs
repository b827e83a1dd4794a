//! Quantum state transfer between a nanomechanical resonator and a
//! transmission-line resonator mediated by a charge qubit.
//!
//! * [`algebra`]: truncated Fock spaces, operators and states.
//! * [`model`]: device parameters and the model Hamiltonians.
//! * [`dynamics`]: exact time evolution and closed-form predictions.
//! * [`protocols`]: transfer, measurement, coherent-state preparation and
//!   effective-versus-full comparisons.

pub mod algebra;
pub mod error;
pub mod dynamics;
pub mod model;
pub mod protocols;

pub use error::{Error, Result};
