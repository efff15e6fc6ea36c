//! Exact simulation of small qubit registers.
//!
//! Pure states are dense amplitude vectors ([`QuantumState`]); mixed states
//! used by the noise experiments are dense density matrices
//! ([`DensityMatrix`]). Qubit 0 is the most significant bit of a basis index,
//! so `|q0 q1 ... q(n-1)>` reads left to right.
//!
//! Global phases are never observable here: state equality is overlap
//! magnitude 1 within [`EQ_TOL`].

mod aharonov;
mod density;
mod register;
mod state;

pub use aharonov::{decode_trit, encode_trit, prepare_aharonov, AHARONOV_QUBITS};
pub use density::DensityMatrix;
pub use register::{swap_transfer, ProductRegister};
pub use state::{label_rotate, MeasBasis, QuantumState, StateLabel};

use thiserror::Error;

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 12;

/// Tolerance for normalization, Hermiticity and phase-insensitive equality.
pub const EQ_TOL: f64 = 1e-9;

/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("{0} qubits exceeds the engine limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    BadDimension(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("angle {0} is not a multiple of pi/2 in [0, 2pi)")]
    NotQuarterTurn(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("registers overlap at qubit {0}")]
    OverlappingRegisters(usize),
    #[error("register lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("state is entangled and cannot be factored")]
    Entangled,
}
