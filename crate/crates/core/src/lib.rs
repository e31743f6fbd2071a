//! Simulation and estimation toolkit for randomized-measurement experiments
//! on small quantum spin chains.
//!
//! The crate covers the full pipeline:
//!
//! * [`spin`] — states, density matrices, partial traces, Pauli observables
//!   and magnetization projectors on up to [`MAX_QUBITS`] qubits.
//! * [`dynamics`] — Néel / tilted-ferromagnet preparation, the long-range XY
//!   Hamiltonian, exact time evolution and local noise channels.
//! * [`randmeas`] — Haar (CUE) single-qubit unitary sampling and simulated
//!   acquisition of randomized-measurement datasets.
//! * [`shadows`] — classical-shadow estimators for full counting statistics
//!   (FCS), magnetization probability distributions (PDF), Pauli moments and
//!   their statistical errors.
//! * [`oracle`] — exact dense and closed-form reference values the estimators
//!   are validated against.
//! * [`io`] — file schemas for states, datasets and analysis tables.
//!
//! Everything is dense and double precision; systems are capped at
//! [`MAX_QUBITS`] qubits so that exact eigendecomposition stays practical.

pub mod dense;
pub mod dynamics;
mod error;
pub mod io;
pub mod mat2;
pub mod oracle;
pub mod randmeas;
pub mod shadows;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};

/// Hard cap on system size for dense simulation (2^14 amplitudes).
pub const MAX_QUBITS: usize = 14;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix type used for operators and density matrices.
pub type CMat = faer::Mat<faer::c64>;
