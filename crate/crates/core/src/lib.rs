//! Numerical laboratory for a cavity Rydberg-EIT photon-photon CPHASE/CNOT gate.
//!
//! The crate is organized along the pipeline it supports:
//!
//! - [`quantum`]: kets, density matrices, polarization conventions, operator
//!   bases with their metric and dual, the ideal gate unitaries and Haar sampling.
//! - [`cavity`]: finesse bookkeeping, the complex cavity-EIT reflection model,
//!   spectrum fitting, storage/retrieval efficiency, coupling and blockade estimates.
//! - [`gate`]: the phenomenological per-shot channel, the reduced process matrix
//!   and visibility model, truth tables.
//! - [`ghz`]: multiphoton parity analysis, the closed-form GHZ model with its
//!   Monte Carlo oracle, and coincidence-rate models.
//! - [`sim`]: the shot-level photon-counting simulator producing [`CountsTable`]s.
//! - [`tomography`]: state, process and efficiency tomography.
//!
//! Internally all frequencies are angular (rad/s) and all times are seconds.
//! [`units`] holds the single conversion layer to the MHz / µs / µm reporting units.

#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Qubit-position loops index several parallel arrays.
#![allow(clippy::needless_range_loop)]

pub mod cavity;
pub mod error;
pub mod gate;
pub mod ghz;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod preset;
pub mod quantum;
pub mod rng;
pub mod sim;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use quantum::{
    DensityMatrix, GateUnitary, Ket, OperatorBasis, Polarization, PolarizationLabel,
};
pub use sim::counts::CountsTable;
pub use tomography::{EfficiencyMatrix, ProcessMatrix, SuperopMatrix};
