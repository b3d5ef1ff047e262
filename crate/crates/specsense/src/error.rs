// SPDX-License-Identifier: MIT

//! Error type for the library.
//!
//! Every failure carries enough context to act on: dimensions for shape
//! mismatches, the offending shift for singular resolvent solves, the
//! detected kernel dimension for degenerate steady states. Numerical
//! policies (imaginary residues, vanishing denominators) fail loudly here
//! instead of silently truncating.

use num_complex::Complex64;
use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible shapes.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A vector length is not a perfect square, so it cannot be reshaped
    /// into a density matrix.
    #[error("vector length {len} is not a perfect square")]
    NotSquareLength { len: usize },

    /// A matrix required to be Hermitian is not, beyond tolerance.
    #[error("matrix {context} is not Hermitian: max deviation {deviation:.3e}")]
    NonHermitian {
        context: &'static str,
        deviation: f64,
    },

    /// The generator kernel is not one-dimensional, so no unique steady
    /// state exists.
    #[error("steady state is not unique: generator kernel dimension is {kernel_dim}")]
    DegenerateSteadyState { kernel_dim: usize },

    /// The steady-state solve produced a residual above tolerance and the
    /// kernel could not be diagnosed further.
    #[error("steady-state residual {residual:.3e} exceeds {bound:.3e}")]
    SteadyStateResidual { residual: f64, bound: f64 },

    /// The computed steady state has a negative eigenvalue beyond rounding.
    #[error("steady state is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    SteadyStateNotPositive { min_eig: f64 },

    /// A shifted resolvent solve (L - z I) x = b failed or left a residual
    /// above tolerance; the shift identifies the offending frequency point.
    #[error("shifted solve at z = {shift} is singular or inaccurate: residual {residual:.3e}")]
    ShiftedSolveSingular { shift: Complex64, residual: f64 },

    /// An auxiliary-matrix equation verified above the residual bound.
    #[error(
        "auxiliary equation {index} residual {residual:.3e} exceeds {bound:.3e}"
    )]
    HierarchyResidual {
        index: String,
        residual: f64,
        bound: f64,
    },

    /// A trace that is real by construction carries a non-negligible
    /// imaginary part; reported, never silently discarded.
    #[error(
        "trace of {context} has imaginary residue {imag:.3e} exceeding {bound:.3e} * |Re|"
    )]
    ImaginaryResidue {
        context: &'static str,
        imag: f64,
        bound: f64,
    },

    /// A normalization denominator is too small to divide by: the model
    /// does not emit at the probed frequency.
    #[error(
        "vanishing denominator: filtered population {value:.3e} at omega = {omega} is below \
         {floor:.3e}; no emission at this frequency"
    )]
    VanishingDenominator { value: f64, omega: f64, floor: f64 },

    /// Matrix functions received a non-finite input or produced a
    /// non-finite intermediate.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested number of sensors is unsupported.
    #[error("unsupported sensor count {got}: {reason}")]
    SensorCount { got: usize, reason: &'static str },

    /// A named emission operator is missing from the model.
    #[error("model defines no emission operator named {name:?}")]
    UnknownEmissionOp { name: String },

    /// A model file failed to parse or violated the format contract.
    #[error("model file error: {0}")]
    ModelFile(String),

    /// Low-level dense linear algebra failure (factorization breakdown,
    /// eigensolver non-convergence).
    #[error("linear algebra backend error: {0}")]
    Lapack(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Lapack(e.to_string())
    }
}
