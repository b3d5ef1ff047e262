// SPDX-License-Identifier: MIT

//! Liouville-space primitives for Markovian open-system dynamics.
//!
//! Density matrices are vectorized by column stacking,
//! `vec(rho)[j*d + i] = rho[i, j]`, so that `vec(A X B) = (B^T kron A) vec(X)`.
//! A Lindblad generator with Hamiltonian H and jump operators c_k at rates
//! gamma_k acts as
//!
//! ```text
//! L rho = -i [H, rho] + sum_k (gamma_k / 2) (2 c_k rho c_k^dag
//!         - c_k^dag c_k rho - rho c_k^dag c_k)
//! ```
//!
//! Ref: Breuer & Petruccione, "The Theory of Open Quantum Systems" (2002),
//! Ch. 3. The matrix exponential uses the [13/13] Pade approximant with
//! scaling and squaring (Higham 2005).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use ndarray_linalg::{Eig, Eigh, FactorizeInto, InverseInto, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Complex scalar type used throughout the crate.
pub type C64 = Complex64;

/// Kronecker product, re-exported for superoperator assembly.
pub use ndarray::linalg::kron;

pub(crate) fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Hermitian adjoint (conjugate transpose).
pub fn dagger(a: ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Trace of a square matrix.
pub fn trace(a: ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Column-stacking vectorization: `vec(op)[j*d + i] = op[i, j]`.
pub fn vectorize(op: ArrayView2<C64>) -> Array1<C64> {
    // Iterating the transpose in row-major order walks the original in
    // column-major order.
    Array1::from_iter(op.t().iter().cloned())
}

/// Inverse of [`vectorize`]; errors if the length is not a perfect square.
pub fn devectorize(v: ArrayView1<C64>) -> Result<Array2<C64>> {
    let len = v.len();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len {
        return Err(Error::NotSquareLength { len });
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| v[j * d + i]))
}

/// Matrix 1-norm (max column sum of moduli).
pub(crate) fn norm1(a: ArrayView2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest modulus over all entries.
pub(crate) fn max_abs(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Superoperator of the commutator part, `rho -> -i [H, rho]`.
pub fn commutator_superop(h: ArrayView2<C64>) -> Array2<C64> {
    let d = h.nrows();
    let eye = Array2::<C64>::eye(d);
    let mut out = kron(&eye, &h) - kron(&h.t().to_owned(), &eye);
    out.mapv_inplace(|z| z * C64::new(0.0, -1.0));
    out
}

/// Superoperator of the bare dissipator
/// `rho -> 2 c rho c^dag - c^dag c rho - rho c^dag c`.
///
/// Callers scale by `rate / 2` to form a Lindblad channel.
pub fn dissipator(c: ArrayView2<C64>) -> Array2<C64> {
    let d = c.nrows();
    let eye = Array2::<C64>::eye(d);
    let cd = dagger(c);
    let cdc = cd.dot(&c);
    let cbar = c.mapv(|z| z.conj());
    let mut out = kron(&cbar, &c.to_owned());
    out.mapv_inplace(|z| z * cr(2.0));
    out -= &kron(&eye, &cdc);
    out -= &kron(&cdc.t().to_owned(), &eye);
    out
}

/// One decay channel: jump operator and its rate.
#[derive(Debug, Clone)]
pub struct LindbladChannel {
    /// Nonnegative rate multiplying the dissipator as `rate / 2`.
    pub rate: f64,
    /// Jump operator in the system basis.
    pub jump: Array2<C64>,
}

impl LindbladChannel {
    pub fn new(rate: f64, jump: Array2<C64>) -> Self {
        Self { rate, jump }
    }
}

/// Assembles the Lindblad generator for a Hamiltonian and channel list.
///
/// The Hamiltonian must be Hermitian to `1e-12` relative to its largest
/// entry; rates must be nonnegative. The result is trace preserving by
/// construction (see [`Superoperator::trace_defect`]).
pub fn build_liouvillian(
    h: ArrayView2<C64>,
    channels: &[LindbladChannel],
) -> Result<Superoperator> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "build_liouvillian hamiltonian",
            expected: format!("{d}x{d}"),
            got: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    let scale = max_abs(h).max(1.0);
    let herm_dev = (&h - &dagger(h))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_dev > 1e-12 * scale {
        return Err(Error::NonHermitian {
            context: "hamiltonian",
            deviation: herm_dev,
        });
    }
    let mut l = commutator_superop(h);
    for ch in channels {
        if !(ch.rate >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "channel rate",
                reason: format!("must be nonnegative, got {}", ch.rate),
            });
        }
        if ch.jump.nrows() != d || ch.jump.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "build_liouvillian channel",
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", ch.jump.nrows(), ch.jump.ncols()),
            });
        }
        let diss = dissipator(ch.jump.view());
        let w = cr(ch.rate / 2.0);
        Zip::from(&mut l).and(&diss).for_each(|a, &b| *a += w * b);
    }
    Superoperator::new(l)
}

/// Dense generator acting on vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    mat: Array2<C64>,
    hdim: usize,
}

/// Largest Liouville dimension for which a failed steady-state solve is
/// diagnosed with a full eigendecomposition to report the kernel dimension.
/// Above this, the cost of the diagnostic would dwarf the solve itself.
const DIAG_EIG_MAX_DIM: usize = 2048;

/// [13/13] Pade numerator coefficients b_0..b_13 (Higham 2005, Table 2.3).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

impl Superoperator {
    /// Wraps a dense matrix; the side must be a perfect square.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "Superoperator::new",
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        let hdim = (n as f64).sqrt().round() as usize;
        if hdim * hdim != n {
            return Err(Error::NotSquareLength { len: n });
        }
        Ok(Self { mat, hdim })
    }

    /// Hilbert-space dimension d.
    pub fn hdim(&self) -> usize {
        self.hdim
    }

    /// Liouville-space dimension d^2.
    pub fn ldim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.mat.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    /// Plain transpose, generating Heisenberg-picture evolution.
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.t().to_owned(),
            hdim: self.hdim,
        }
    }

    /// Applies the generator to a vectorized operator.
    pub fn apply_vec(&self, v: ArrayView1<C64>) -> Result<Array1<C64>> {
        if v.len() != self.ldim() {
            return Err(Error::DimensionMismatch {
                context: "Superoperator::apply_vec",
                expected: self.ldim().to_string(),
                got: v.len().to_string(),
            });
        }
        Ok(self.mat.dot(&v))
    }

    /// Applies the generator to an operator in matrix form.
    pub fn apply(&self, rho: ArrayView2<C64>) -> Result<Array2<C64>> {
        devectorize(self.apply_vec(vectorize(rho).view())?.view())
    }

    /// Largest entry of the vectorized identity applied from the left,
    /// `max_k |sum_i (L)_{(i,i),k}|`. Zero for a trace-preserving map.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hdim;
        let n = self.ldim();
        (0..n)
            .map(|k| {
                (0..d)
                    .map(|i| self.mat[[i * d + i, k]])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Trace-preservation predicate at tolerance [`tol::TRACE_PRESERVATION`]
    /// relative to the generator's 1-norm.
    pub fn is_trace_preserving(&self) -> bool {
        self.trace_defect() <= tol::TRACE_PRESERVATION * norm1(self.mat.view()).max(1.0)
    }

    /// Unique steady state: solves `L vec(rho) = 0` with the trace
    /// constraint replacing one row, then validates the result.
    ///
    /// Post-conditions: residual `norm_inf(L vec(rho))` at most
    /// [`tol::STEADY_RESIDUAL`] times `norm1(L)`, exact Hermitian symmetry
    /// (the result is symmetrized), unit trace, and minimum eigenvalue at
    /// least [`tol::STEADY_MIN_EIG`].
    ///
    /// A kernel of dimension other than one makes the constrained system
    /// singular or the residual large; both paths are diagnosed with a full
    /// eigendecomposition (up to dimension `DIAG_EIG_MAX_DIM`) so the error
    /// carries the detected kernel dimension.
    pub fn steady_state(&self) -> Result<Array2<C64>> {
        let d = self.hdim;
        let n = self.ldim();
        let mut a = self.mat.clone();
        for k in 0..n {
            a[[0, k]] = cr(0.0);
        }
        for i in 0..d {
            a[[0, i * d + i]] = cr(1.0);
        }
        let mut b = Array1::<C64>::zeros(n);
        b[0] = cr(1.0);

        let lnorm = norm1(self.mat.view()).max(1.0);
        let bound = tol::STEADY_RESIDUAL * lnorm;
        let x = match a.factorize_into() {
            Ok(f) => match f.solve_into(b) {
                Ok(x) => x,
                Err(_) => return Err(self.diagnose_kernel(f64::INFINITY, bound)),
            },
            Err(_) => return Err(self.diagnose_kernel(f64::INFINITY, bound)),
        };

        let residual = self
            .mat
            .dot(&x)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !residual.is_finite() || residual > bound {
            return Err(self.diagnose_kernel(residual, bound));
        }

        let rho_raw = devectorize(x.view())?;
        let mut rho = &rho_raw + &dagger(rho_raw.view());
        rho.mapv_inplace(|z| z * cr(0.5));
        let tr = trace(rho.view());
        rho.mapv_inplace(|z| z / tr);

        let (eigs, _) = rho.eigh(UPLO::Lower)?;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < tol::STEADY_MIN_EIG {
            return Err(Error::SteadyStateNotPositive { min_eig });
        }
        Ok(rho)
    }

    /// Steady state solved in rescaled coordinates `x = diag(scale) y`.
    ///
    /// The plain solve resolves the dominant entries of the kernel vector
    /// to machine precision but leaves only an absolute accuracy of order
    /// `u * norm1(L)` for the rest, which destroys any structurally small
    /// layer of the steady state, such as the multi-sensor coincidence
    /// sector of a weakly coupled detector model. When the expected
    /// magnitude pattern is known, passing it as `scale` applies the
    /// similarity transform `L' = D^-1 L D` with `D = diag(scale)`, which
    /// brings every retained layer to order one so a single LU solve
    /// recovers each of them with full relative accuracy; the solution is
    /// mapped back as `x = scale . y`. With all scales equal to one this
    /// reduces to [`Superoperator::steady_state`].
    ///
    /// The trace constraint is imposed in scaled coordinates as
    /// `sum_i y[i d + i] = 1`, a valid pinning functional whenever the
    /// true diagonal entries are nonnegative, and the result is
    /// renormalized to unit trace afterwards. Post-conditions mirror the
    /// plain solve: the scaled residual stays below
    /// [`tol::STEADY_RESIDUAL`] times `norm1(L') * max(1, norm_inf(y))`,
    /// the result is Hermitian by symmetrization, has unit trace, and its
    /// minimum eigenvalue is at least [`tol::STEADY_MIN_EIG`].
    pub fn scaled_steady_state(&self, scale: &[f64]) -> Result<Array2<C64>> {
        let d = self.hdim;
        let n = self.ldim();
        if scale.len() != n {
            return Err(Error::DimensionMismatch {
                context: "scaled steady-state solve",
                expected: format!("{n} scale entries"),
                got: format!("{}", scale.len()),
            });
        }
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: "entries must be positive and finite".into(),
            });
        }

        let mut a = Array2::<C64>::zeros((n, n));
        let mut col_sums = vec![0.0_f64; n];
        for r in 0..n {
            let inv = 1.0 / scale[r];
            for c in 0..n {
                let z = self.mat[[r, c]] * cr(scale[c] * inv);
                col_sums[c] += z.norm();
                a[[r, c]] = z;
            }
        }
        let lnorm = col_sums.iter().cloned().fold(0.0, f64::max).max(1.0);

        for k in 0..n {
            a[[0, k]] = cr(0.0);
        }
        for i in 0..d {
            a[[0, i * d + i]] = cr(1.0);
        }
        let mut b = Array1::<C64>::zeros(n);
        b[0] = cr(1.0);

        let fallback = tol::STEADY_RESIDUAL * lnorm;
        let y = match a.factorize_into() {
            Ok(f) => match f.solve_into(b) {
                Ok(y) => y,
                Err(_) => return Err(self.diagnose_kernel(f64::INFINITY, fallback)),
            },
            Err(_) => return Err(self.diagnose_kernel(f64::INFINITY, fallback)),
        };

        // The scaled residual L' y is recovered from the original
        // generator as (1 / s_r) (L x)_r, so the consumed factorization
        // input never needs rebuilding.
        let mut x = Array1::<C64>::zeros(n);
        for v in 0..n {
            x[v] = y[v] * cr(scale[v]);
        }
        let lx = self.mat.dot(&x);
        let ymax = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let bound = tol::STEADY_RESIDUAL * lnorm * ymax.max(1.0);
        let mut residual = {
            let mut pin = -cr(1.0);
            for i in 0..d {
                pin += y[i * d + i];
            }
            pin.norm()
        };
        for r in 1..n {
            residual = residual.max(lx[r].norm() / scale[r]);
        }
        if !residual.is_finite() || residual > bound {
            return Err(self.diagnose_kernel(residual, bound));
        }

        let rho_raw = devectorize(x.view())?;
        let mut rho = &rho_raw + &dagger(rho_raw.view());
        rho.mapv_inplace(|z| z * cr(0.5));
        let tr = trace(rho.view());
        rho.mapv_inplace(|z| z / tr);

        let (eigs, _) = rho.eigh(UPLO::Lower)?;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < tol::STEADY_MIN_EIG {
            return Err(Error::SteadyStateNotPositive { min_eig });
        }
        Ok(rho)
    }

    /// Counts near-zero generator eigenvalues to report the kernel
    /// dimension behind a failed steady-state solve.
    fn diagnose_kernel(&self, residual: f64, bound: f64) -> Error {
        if self.ldim() <= DIAG_EIG_MAX_DIM {
            if let Ok((eigs, _)) = self.mat.eig() {
                let thr = tol::KERNEL_EIG_REL * norm1(self.mat.view()).max(1.0);
                let kernel_dim = eigs.iter().filter(|z| z.norm() <= thr).count();
                if kernel_dim != 1 {
                    return Error::DegenerateSteadyState { kernel_dim };
                }
            }
        }
        Error::SteadyStateResidual { residual, bound }
    }

    /// Solves the shifted system `(L - z I) x = b`.
    ///
    /// Post-condition: residual `norm_inf((L - z) x - b)` at most
    /// [`tol::SHIFTED_RESIDUAL`] times `norm_inf(b)`; otherwise the error
    /// reports the offending shift.
    pub fn shifted_solve(&self, z: C64, b: ArrayView1<C64>) -> Result<Array1<C64>> {
        let n = self.ldim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "Superoperator::shifted_solve",
                expected: n.to_string(),
                got: b.len().to_string(),
            });
        }
        let mut a = self.mat.clone();
        for i in 0..n {
            a[[i, i]] -= z;
        }
        let x = a
            .factorize_into()
            .and_then(|f| f.solve_into(b.to_owned()))
            .map_err(|_| Error::ShiftedSolveSingular {
                shift: z,
                residual: f64::INFINITY,
            })?;

        let bnorm = b.iter().map(|w| w.norm()).fold(0.0, f64::max).max(1e-300);
        let mut r = self.mat.dot(&x);
        Zip::from(&mut r).and(&x).and(b).for_each(|ri, &xi, &bi| {
            *ri = *ri - z * xi - bi;
        });
        let residual = r.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if !residual.is_finite() || residual > tol::SHIFTED_RESIDUAL * bnorm {
            return Err(Error::ShiftedSolveSingular {
                shift: z,
                residual: residual / bnorm,
            });
        }
        Ok(x)
    }

    /// Matrix exponential `exp(L t)` by [13/13] Pade approximation with
    /// scaling and squaring. Memory use peaks at six dense matrices of the
    /// generator's size.
    pub fn expm(&self, t: f64) -> Result<Propagator> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be finite, got {t}"),
            });
        }
        let n = self.ldim();
        let mut a = self.mat.mapv(|z| z * cr(t));
        let nrm = norm1(a.view());
        if !nrm.is_finite() {
            return Err(Error::NonFinite {
                context: "expm input norm",
            });
        }
        let s = if nrm > tol::EXPM_THETA_13 {
            (nrm / tol::EXPM_THETA_13).log2().ceil() as u32
        } else {
            0
        };
        if s > 0 {
            let w = cr(0.5f64.powi(s as i32));
            a.mapv_inplace(|z| z * w);
        }

        let b = &PADE13;
        let a2 = a.dot(&a);
        let a4 = a2.dot(&a2);
        let a6 = a2.dot(&a4);

        // Odd part U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4
        //               + b3 A2 + b1 I).
        let mut w = Array2::<C64>::zeros((n, n));
        Zip::from(&mut w)
            .and(&a6)
            .and(&a4)
            .and(&a2)
            .for_each(|wi, &x6, &x4, &x2| {
                *wi = cr(b[13]) * x6 + cr(b[11]) * x4 + cr(b[9]) * x2;
            });
        let mut zbr = a6.dot(&w);
        Zip::from(&mut zbr)
            .and(&a6)
            .and(&a4)
            .and(&a2)
            .for_each(|zi, &x6, &x4, &x2| {
                *zi += cr(b[7]) * x6 + cr(b[5]) * x4 + cr(b[3]) * x2;
            });
        for i in 0..n {
            zbr[[i, i]] += cr(b[1]);
        }
        let u = a.dot(&zbr);
        drop(zbr);
        drop(a);

        // Even part V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4
        //             + b2 A2 + b0 I, reusing W's storage.
        Zip::from(&mut w)
            .and(&a6)
            .and(&a4)
            .and(&a2)
            .for_each(|wi, &x6, &x4, &x2| {
                *wi = cr(b[12]) * x6 + cr(b[10]) * x4 + cr(b[8]) * x2;
            });
        let mut v = a6.dot(&w);
        drop(w);
        Zip::from(&mut v)
            .and(&a6)
            .and(&a4)
            .and(&a2)
            .for_each(|vi, &x6, &x4, &x2| {
                *vi += cr(b[6]) * x6 + cr(b[4]) * x4 + cr(b[2]) * x2;
            });
        for i in 0..n {
            v[[i, i]] += cr(b[0]);
        }
        drop(a2);
        drop(a4);
        drop(a6);

        // exp(A) ~ (V - U)^-1 (V + U), then square s times.
        let vpu = &v + &u;
        Zip::from(&mut v).and(&u).for_each(|vi, &ui| *vi -= ui);
        drop(u);
        let inv = v.inv_into().map_err(|e| Error::Lapack(e.to_string()))?;
        let mut e = inv.dot(&vpu);
        drop(vpu);
        for _ in 0..s {
            e = e.dot(&e);
        }
        if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "expm result",
            });
        }
        Ok(Propagator {
            mat: e,
            hdim: self.hdim,
        })
    }

    /// Convenience forward propagation `rho(t) = exp(L t) rho`; builds the
    /// full exponential, so reuse a [`Propagator`] for repeated steps.
    pub fn propagate(&self, rho: ArrayView2<C64>, t: f64) -> Result<Array2<C64>> {
        if t < 0.0 {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be nonnegative, got {t}"),
            });
        }
        self.expm(t)?.apply(rho)
    }
}

/// Heisenberg-picture evolution of an operator:
/// `trace[heisenberg(L, a, t) X] = trace[a exp(L t)(X)]` for every X.
///
/// Uses the transpose identity `trace[A Y] = vec(A^T) . vec(Y)` (plain dot,
/// no conjugation), so `A(t)^T = devec(exp(L^T t) vec(A^T))`.
pub fn heisenberg(l: &Superoperator, a: ArrayView2<C64>, t: f64) -> Result<Array2<C64>> {
    let at = a.t().to_owned();
    let v = vectorize(at.view());
    let e = l.transpose().expm(t)?;
    let w = e.apply_vec(v.view())?;
    Ok(devectorize(w.view())?.t().to_owned())
}

/// Precomputed step operator `exp(L t)` for repeated application.
#[derive(Debug, Clone)]
pub struct Propagator {
    mat: Array2<C64>,
    hdim: usize,
}

impl Propagator {
    pub fn hdim(&self) -> usize {
        self.hdim
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.mat.view()
    }

    pub fn apply_vec(&self, v: ArrayView1<C64>) -> Result<Array1<C64>> {
        if v.len() != self.mat.nrows() {
            return Err(Error::DimensionMismatch {
                context: "Propagator::apply_vec",
                expected: self.mat.nrows().to_string(),
                got: v.len().to_string(),
            });
        }
        Ok(self.mat.dot(&v))
    }

    pub fn apply(&self, rho: ArrayView2<C64>) -> Result<Array2<C64>> {
        devectorize(self.apply_vec(vectorize(rho).view())?.view())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Array2<C64> {
        Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_liouvillian(rng: &mut ChaCha8Rng, d: usize) -> Superoperator {
        let g = random_matrix(rng, d);
        let h = &g + &dagger(g.view());
        let c1 = random_matrix(rng, d);
        let c2 = random_matrix(rng, d);
        build_liouvillian(
            h.view(),
            &[
                LindbladChannel::new(0.8, c1),
                LindbladChannel::new(0.3, c2),
            ],
        )
        .unwrap()
    }

    fn two_level_sigma() -> Array2<C64> {
        let mut s = Array2::<C64>::zeros((2, 2));
        s[[0, 1]] = cr(1.0);
        s
    }

    #[test]
    fn vectorize_column_stacking_examples() {
        let eye = Array2::<C64>::eye(2);
        let v = vectorize(eye.view());
        assert_eq!(v.to_vec(), vec![cr(1.0), cr(0.0), cr(0.0), cr(1.0)]);

        // |0><1| has its single entry at row 0, column 1.
        let s = two_level_sigma();
        let v = vectorize(s.view());
        assert_eq!(v.to_vec(), vec![cr(0.0), cr(0.0), cr(1.0), cr(0.0)]);
    }

    #[test]
    fn devectorize_roundtrip_and_length_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3);
        let b = devectorize(vectorize(a.view()).view()).unwrap();
        assert_eq!(a, b);

        let bad = Array1::<C64>::zeros(5);
        assert!(matches!(
            devectorize(bad.view()),
            Err(Error::NotSquareLength { len: 5 })
        ));
    }

    #[test]
    fn trace_equals_identity_dot_vectorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 4);
        let vid = vectorize(Array2::<C64>::eye(4).view());
        let dot: C64 = vid
            .iter()
            .zip(vectorize(a.view()).iter())
            .map(|(x, y)| x * y)
            .sum();
        assert!((dot - trace(a.view())).norm() < 1e-14);
    }

    #[test]
    fn kron_sandwich_identity() {
        // vec(A X B) = (B^T kron A) vec(X).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 3);
        let x = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let lhs = vectorize(a.dot(&x).dot(&b).view());
        let sup = kron(&b.t().to_owned(), &a);
        let rhs = sup.dot(&vectorize(x.view()));
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).norm() < 1e-13);
        }
    }

    #[test]
    fn dissipator_direct_evaluation() {
        let s = two_level_sigma();
        let d = dissipator(s.view());
        // rho = |1><1| maps to 2|0><0| - 2|1><1|.
        let rho = array![[cr(0.0), cr(0.0)], [cr(0.0), cr(1.0)]];
        let out = devectorize(d.dot(&vectorize(rho.view())).view()).unwrap();
        let expected = array![[cr(2.0), cr(0.0)], [cr(0.0), cr(-2.0)]];
        for (a, b) in out.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dissipator_annihilates_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_matrix(&mut rng, 4);
        let d = dissipator(c.view());
        let rho = random_matrix(&mut rng, 4);
        let out = devectorize(d.dot(&vectorize(rho.view())).view()).unwrap();
        assert!(trace(out.view()).norm() < 1e-13);
    }

    #[test]
    fn commutator_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_matrix(&mut rng, 3);
        let h = &g + &dagger(g.view());
        let sup = commutator_superop(h.view());
        let rho = random_matrix(&mut rng, 3);
        let direct = {
            let mut m = h.dot(&rho) - rho.dot(&h);
            m.mapv_inplace(|z| z * C64::new(0.0, -1.0));
            m
        };
        let via = devectorize(sup.dot(&vectorize(rho.view())).view()).unwrap();
        for (a, b) in direct.iter().zip(via.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn liouvillian_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let l = random_liouvillian(&mut rng, 3);
        assert!(l.is_trace_preserving());
    }

    #[test]
    fn build_rejects_non_hermitian_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_matrix(&mut rng, 3);
        assert!(matches!(
            build_liouvillian(h.view(), &[]),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn driven_two_level_steady_state() {
        // Decay gamma and incoherent pump p give excited population
        // p / (p + gamma).
        let gamma = 0.7;
        let p = 0.2;
        let s = two_level_sigma();
        let l = build_liouvillian(
            Array2::<C64>::zeros((2, 2)).view(),
            &[
                LindbladChannel::new(gamma, s.clone()),
                LindbladChannel::new(p, dagger(s.view())),
            ],
        )
        .unwrap();
        let rho = l.steady_state().unwrap();
        assert_abs_diff_eq!(rho[[1, 1]].re, p / (p + gamma), epsilon = 1e-13);
        assert_abs_diff_eq!(rho[[0, 0]].re, gamma / (p + gamma), epsilon = 1e-13);
        assert!(rho[[0, 1]].norm() < 1e-13);
        assert!((trace(rho.view()) - cr(1.0)).norm() < 1e-14);
    }

    #[test]
    fn steady_state_reports_kernel_dimension() {
        let l = Superoperator::new(Array2::<C64>::zeros((4, 4))).unwrap();
        match l.steady_state() {
            Err(Error::DegenerateSteadyState { kernel_dim }) => assert_eq!(kernel_dim, 4),
            other => panic!("expected degenerate steady state, got {other:?}"),
        }
    }

    #[test]
    fn scaled_steady_state_with_unit_scales_matches_plain() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let l = random_liouvillian(&mut rng, 3);
        let plain = l.steady_state().unwrap();
        let scaled = l.scaled_steady_state(&vec![1.0; 9]).unwrap();
        for (p, s) in plain.iter().zip(scaled.iter()) {
            assert!((p - s).norm() < 1e-12);
        }
    }

    #[test]
    fn scaled_steady_state_validates_scale_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let l = random_liouvillian(&mut rng, 2);
        assert!(matches!(
            l.scaled_steady_state(&[1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let mut scale = vec![1.0; 4];
            scale[2] = bad;
            assert!(matches!(
                l.scaled_steady_state(&scale),
                Err(Error::InvalidParameter { name: "scale", .. })
            ));
        }
    }

    #[test]
    fn shifted_solve_diagonal_and_residual() {
        let l = Superoperator::new(Array2::<C64>::zeros((4, 4))).unwrap();
        let b = Array1::from_vec(vec![cr(1.0), cr(2.0), cr(-1.0), cr(0.5)]);
        // (0 - z) x = b with z = 2 gives x = -b / 2.
        let x = l.shifted_solve(cr(2.0), b.view()).unwrap();
        for (xi, bi) in x.iter().zip(b.iter()) {
            assert!((xi + bi / cr(2.0)).norm() < 1e-14);
        }
        // z = 0 makes the system singular.
        assert!(matches!(
            l.shifted_solve(cr(0.0), b.view()),
            Err(Error::ShiftedSolveSingular { .. })
        ));
    }

    #[test]
    fn expm_of_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = random_liouvillian(&mut rng, 3);
        let p = l.expm(0.0).unwrap();
        let eye = Array2::<C64>::eye(9);
        for (a, b) in p.matrix().iter().zip(eye.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_matches_two_level_decay() {
        let gamma = 0.9;
        let s = two_level_sigma();
        let l = build_liouvillian(
            Array2::<C64>::zeros((2, 2)).view(),
            &[LindbladChannel::new(gamma, s)],
        )
        .unwrap();
        // Superposition initial state decays as e^{-gamma t} in population
        // and e^{-gamma t / 2} in coherence.
        let rho0 = array![[cr(0.5), cr(0.5)], [cr(0.5), cr(0.5)]];
        let t = 1.3;
        let rho = l.propagate(rho0.view(), t).unwrap();
        let pop = 0.5 * (-gamma * t).exp();
        let coh = 0.5 * (-gamma * t / 2.0).exp();
        assert_abs_diff_eq!(rho[[1, 1]].re, pop, epsilon = 1e-12);
        assert_abs_diff_eq!(rho[[0, 0]].re, 1.0 - pop, epsilon = 1e-12);
        assert_abs_diff_eq!(rho[[0, 1]].re, coh, epsilon = 1e-12);
    }

    #[test]
    fn expm_semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = random_liouvillian(&mut rng, 3);
        let p1 = l.expm(0.3).unwrap();
        let p2 = l.expm(0.5).unwrap();
        let p3 = l.expm(0.8).unwrap();
        let prod = p1.matrix().dot(&p2.matrix());
        let scale = max_abs(p3.matrix()).max(1.0);
        for (a, b) in prod.iter().zip(p3.matrix().iter()) {
            assert!((a - b).norm() < 1e-11 * scale);
        }
    }

    #[test]
    fn expm_triggers_scaling_for_large_norms() {
        // Norm far above theta_13 exercises the squaring phase.
        let mut m = Array2::<C64>::zeros((4, 4));
        m[[0, 0]] = cr(-40.0);
        m[[3, 3]] = cr(-75.0);
        let l = Superoperator::new(m).unwrap();
        let p = l.expm(1.0).unwrap();
        assert_abs_diff_eq!(p.matrix()[[0, 0]].re, (-40.0f64).exp(), epsilon = 1e-28);
        assert_abs_diff_eq!(p.matrix()[[3, 3]].re, (-75.0f64).exp(), epsilon = 1e-44);
        assert_abs_diff_eq!(p.matrix()[[1, 1]].re, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn propagation_preserves_trace_and_fixed_point() {
        let gamma = 0.7;
        let p = 0.2;
        let s = two_level_sigma();
        let l = build_liouvillian(
            Array2::<C64>::zeros((2, 2)).view(),
            &[
                LindbladChannel::new(gamma, s.clone()),
                LindbladChannel::new(p, dagger(s.view())),
            ],
        )
        .unwrap();
        let rho_ss = l.steady_state().unwrap();
        let moved = l.propagate(rho_ss.view(), 2.5).unwrap();
        for (a, b) in moved.iter().zip(rho_ss.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let rho0 = array![[cr(0.25), cr(0.1)], [cr(0.1), cr(0.75)]];
        let out = l.propagate(rho0.view(), 1.7).unwrap();
        assert!((trace(out.view()) - cr(1.0)).norm() < tol::PROPAGATE_TRACE);
    }

    #[test]
    fn heisenberg_adjoint_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let l = random_liouvillian(&mut rng, 3);
        let a = random_matrix(&mut rng, 3);
        let x = random_matrix(&mut rng, 3);
        let t = 0.7;
        let a_t = heisenberg(&l, a.view(), t).unwrap();
        let lhs = trace(a_t.dot(&x).view());
        let x_t = l.propagate(x.view(), t).unwrap();
        let rhs = trace(a.dot(&x_t).view());
        assert!((lhs - rhs).norm() < tol::ADJOINT_PROPAGATION);
    }

    #[test]
    fn propagate_rejects_negative_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = random_liouvillian(&mut rng, 2);
        let rho = Array2::<C64>::eye(2);
        assert!(matches!(
            l.propagate(rho.view(), -1.0),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
