//! Semi-device-independent self-testing of n-qubit GHZ basis measurements
//! in a prepare-and-measure communication scenario.
//!
//! The crate builds the witness operators of the communication game,
//! certifies optimal strategies (sum-of-squares residuals, closed-form
//! spectra, local-unitary alignment), evaluates robustness bounds, and
//! searches strategy space by see-saw optimization.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod robustness;
pub mod scenario;
pub mod selftest;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, EigenSystem, C64};
pub use states::{BitString, Povm, SenderStates, Strategy};

/// Largest sender count supported by the operator-level routines.
pub const MAX_SENDERS: usize = 7;
