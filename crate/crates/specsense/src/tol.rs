// SPDX-License-Identifier: MIT

//! Centralized numerical tolerances with their justification.
//!
//! Every threshold used by the library and its validation suite lives here
//! so that no module carries ad-hoc magic numbers. Categories:
//!
//! | Category | Basis | Typical value |
//! |----------|-------|---------------|
//! | Exact f64 algebra | IEEE 754 rounding in O(n) compositions | 1e-12 .. 1e-14 |
//! | Direct linear solves | LU with partial pivoting, moderate condition | 1e-10 |
//! | Quadrature / propagation | integrator truncation targets | 1e-8 .. 1e-9 |
//! | Cross-method equivalence | physical approximation scales | 1e-2 |

/// Trace preservation of an assembled Liouvillian: the vectorized identity,
/// applied from the left, must annihilate the generator. Exact algebra up to
/// accumulation over O(d^2) sums of O(rate) entries.
pub const TRACE_PRESERVATION: f64 = 1e-12;

/// Elementwise agreement between a superoperator applied to a vectorized
/// density matrix and the direct matrix-product evaluation of the same map.
/// Both sides are O(d) sums of products; 1e-13 leaves one digit of slack
/// over f64 rounding on O(1) entries.
pub const SUPEROP_MATCH: f64 = 1e-13;

/// Steady-state residual, relative to the 1-norm of the generator:
/// norm(L vec(rho_ss)) <= STEADY_RESIDUAL * norm1(L). A single LU solve on a
/// moderately conditioned system achieves ~1e-13; 1e-10 leaves margin.
pub const STEADY_RESIDUAL: f64 = 1e-10;

/// Hermiticity of a computed steady state before symmetrization is exact up
/// to solver rounding; the returned matrix is symmetrized so its defect is 0.
/// This bound applies to checks of any density-matrix-valued result.
pub const HERMITICITY: f64 = 1e-12;

/// Most negative admissible eigenvalue of a computed steady state. A valid
/// density matrix is positive semidefinite; LU rounding can push tiny
/// negative eigenvalues of order norm(rho) * 1e-13.
pub const STEADY_MIN_EIG: f64 = -1e-10;

/// Eigenvalue magnitude below which a generator eigenvalue counts as part of
/// the kernel when diagnosing a degenerate steady state, relative to
/// norm1(L). Separates the physical zero mode from slow relaxation modes.
pub const KERNEL_EIG_REL: f64 = 1e-8;

/// Residual of a shifted linear solve (L - z I) x = b, relative to norm(b).
pub const SHIFTED_RESIDUAL: f64 = 1e-10;

/// Residual of each auxiliary-matrix equation after back-substitution,
/// relative to max(1, norm(rhs)).
pub const HIERARCHY_RESIDUAL: f64 = 1e-10;

/// Conjugate symmetry of auxiliary matrices: the entry at swapped
/// upper/lower occupation indices must equal the Hermitian adjoint.
pub const CONJUGATE_SYMMETRY: f64 = 1e-10;

/// Imaginary residue policy: traces that are real by construction (diagonal
/// occupation indices) may carry |Im| <= IM_RESIDUE_REL * |Re| of rounding
/// noise; anything larger is an error, never a silent truncation.
pub const IM_RESIDUE_REL: f64 = 1e-10;

/// Absolute companion to [`IM_RESIDUE_REL`]: with the root state normalized
/// to unit trace, solver rounding leaves imaginary parts up to roughly
/// cond * eps ~ 1e-13 on any derived trace. Below this floor an imaginary
/// part is rounding noise even when the real part itself is near zero.
pub const IM_RESIDUE_ABS: f64 = 1e-11;

/// Vanishing-denominator floor: a filtered population below this fraction of
/// the largest one in the same correlation is rejected instead of being used
/// as a divisor.
pub const DENOM_FLOOR_REL: f64 = 1e-14;

/// Absolute floor guarding against all-zero denominators (model emits
/// nothing at any probed frequency).
pub const DENOM_FLOOR_ABS: f64 = 1e-250;

/// Trace drift of a propagated density matrix under a trace-preserving
/// generator, relative to the initial trace.
pub const PROPAGATE_TRACE: f64 = 1e-10;

/// Agreement of Heisenberg-picture operator evolution with Schroedinger
/// propagation: trace[a(t) X] vs trace[a e^{Lt}(X)] for random X.
pub const ADJOINT_PROPAGATION: f64 = 1e-10;

/// Matrix-exponential scaling-and-squaring target: the [13/13] Pade
/// approximant keeps backward error below u for scaled 1-norm <= THETA_13
/// (Higham, "The Scaling and Squaring Method for the Matrix Exponential
/// Revisited", 2005).
pub const EXPM_THETA_13: f64 = 5.371920351148152;

/// Relative agreement between the closed-form first-order delay component
/// and composite Simpson quadrature of its integrand, valid when the node
/// spacing resolves the optical phase (omega * h of order one). Observed
/// headroom is ~50x at that density.
pub const I1_QUADRATURE: f64 = 1e-8;

/// Relative agreement for the second-order delay component under the same
/// resolved-node condition; the nested integral loses ~2 digits to the
/// double composite rule.
pub const I2_QUADRATURE: f64 = 1e-6;

/// Removable-singularity guard in the spectral closed forms: difference
/// quotients switch to a series expansion when |(a - b) tau| falls below
/// this, keeping relative error at the 1e-13 level.
pub const DQ_SERIES_SWITCH: f64 = 1e-6;

/// Relative agreement required between the perturbative time-resolved
/// correlation and the explicit-sensor reference at eps = 1e-3 / cm.
/// The methods differ at O(eps^2) plus propagation error; 1% is the
/// advertised cross-validation band.
pub const ORACLE_EQUIVALENCE: f64 = 1e-2;

/// Fraction of the weak-coupling validity bound sqrt(Gamma * gamma_Q / 2)
/// above which the explicit-sensor construction warns that its leading-order
/// assumption is strained.
pub const ORACLE_VALIDITY_FRACTION: f64 = 0.1;

/// Steady sensor occupation above which the explicit-sensor construction
/// warns: filtered moments are meaningful only while the detectors stay
/// far from saturation, i.e. tr[n_m rho] << 1 for every sensor.
pub const ORACLE_POPULATION_GUARD: f64 = 0.1;
