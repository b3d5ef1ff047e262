// SPDX-License-Identifier: MIT

//! Frequency-filtered, time-resolved photon correlation functions of
//! Markovian open quantum emitters.
//!
//! The crate computes power spectra and normalized correlation functions
//! g^(2), g^(3), ... of light emitted at selected frequencies, resolved in
//! detection delay, without attaching explicit detector degrees of freedom.
//! Filtered detection is handled by a closed hierarchy of auxiliary
//! matrices driven by the emitter's steady state; every observable follows
//! from dense linear solves against the emitter's Lindblad generator.
//!
//! An explicit-detector reference implementation (weakly coupled two-level
//! sensors traced out at the end) is included for cross-validation; the two
//! routes are independent code paths by design.
//!
//! Module map:
//! - [`liouville`]: vectorization, Lindblad generators, steady states,
//!   shifted solves, matrix exponentials.
//! - [`emitter`]: model container, file format, and the built-in vibronic
//!   dimer model.
//! - [`hierarchy`]: auxiliary-matrix recurrence for spectra and
//!   zero-delay correlations.
//! - [`timecorr`]: delay-resolved two-photon correlation from a
//!   perturbative expansion in the filter couplings.
//! - [`oracle`]: explicit-sensor reference route.
//! - [`tol`]: every numerical tolerance, centralized and documented.

// Links the BLAS backend; ndarray dispatches large matrix products to it.
extern crate blas_src;

pub mod emitter;
pub mod error;
pub mod hierarchy;
pub mod liouville;
pub mod oracle;
pub mod timecorr;
pub mod tol;

pub use emitter::{
    build_vibronic_dimer, excited_eigensystem, thermal_occupation, DimerParams, EmitterModel,
    CM1_TO_RAD_PER_PS,
};
pub use error::{Error, Result};
pub use hierarchy::{
    g2_zero, gm_zero, gm_zero_from_aux, power_spectrum, solve_hierarchy, AuxMatrixSet,
    HierarchySolver, MultiIndex, SensorSpec,
};
pub use liouville::{
    build_liouvillian, commutator_superop, dagger, devectorize, dissipator, heisenberg, kron,
    trace, vectorize, LindbladChannel, Propagator, Superoperator, C64,
};
pub use oracle::{
    build_joint, build_joint_with_cap, JointSystem, NormalOrderReport, DEFAULT_JOINT_DIM_CAP,
    MAX_JOINT_SENSORS,
};
pub use timecorr::{
    conditional_state, g2_tau, ConditionalBlocks, CorrelationCurve, Detector, G2TauEvaluator,
    SpectralEngine,
};

