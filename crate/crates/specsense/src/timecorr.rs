// SPDX-License-Identifier: MIT

//! Delay-resolved second-order correlation of frequency-filtered emission.
//!
//! The correlation at delay tau decomposes into three terms evaluated on
//! the post-detection auxiliary blocks of the two-sensor hierarchy:
//!
//! ```text
//! g2(w1, w2, tau) = nu * (I0 + I1 + I2),   nu = 1 / (<n1> <n2>)
//! I0 = e^{-G2 tau} tr[block(1,1)]
//! I1 = 2 Im int_0^tau dt e^{-G2 (tau - t/2) + i w2 t} tr[a2 block(0,1)(t)]
//! I2 = 2 Re int int_{0<=t1<=t2<=tau} e^{-G2 [tau - (t2+t1)/2] + i w2 (t2-t1)}
//!        tr[a2(t2-t1) block(0,0)(t1) a2^dag]
//! ```
//!
//! where the blocks evolve under the emitter generator alone and a2(t) is
//! the Heisenberg-evolved emission operator. Both integrals are evaluated
//! in closed form through the eigendecomposition of the emitter generator,
//! with removable singularities handled by series-expanded difference
//! quotients; nested Simpson quadrature over the same integrands is kept
//! as an in-crate cross-check. Negative delays swap the sensor roles and
//! evaluate at |tau|.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::hierarchy::{solve_hierarchy, AuxMatrixSet, MultiIndex, SensorSpec};
use crate::liouville::{cr, devectorize, kron, trace, vectorize, C64};
use crate::tol;

/// A sampled curve: spectrum over frequency or correlation over delay.
#[derive(Debug, Clone)]
pub struct CorrelationCurve {
    /// Sample points, strictly monotone. Units follow the producer
    /// (rad/ps for spectra, ps for delays).
    pub abscissa: Vec<f64>,
    /// Curve values, finite.
    pub values: Vec<f64>,
    /// Optional per-point normalized (nu I0, nu I1, nu I2) breakdown.
    pub components: Option<Vec<[f64; 3]>>,
    /// Free-form provenance entries (model hash, sensor settings).
    pub metadata: BTreeMap<String, String>,
}

impl CorrelationCurve {
    /// Builds a curve after checking monotonicity and finiteness.
    pub fn new(abscissa: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "CorrelationCurve",
                expected: abscissa.len().to_string(),
                got: values.len().to_string(),
            });
        }
        if abscissa.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "abscissa",
                reason: "must be strictly increasing".to_string(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "CorrelationCurve values",
            });
        }
        Ok(Self {
            abscissa,
            values,
            components: None,
            metadata: BTreeMap::new(),
        })
    }
}

/// Post-detection auxiliary blocks conditioned on a click at one sensor:
/// the map (j, j') over the remaining sensor's indices, with the clicked
/// sensor's pair fixed at (1,1). Rescaled, so no coupling strength
/// appears anywhere.
#[derive(Debug, Clone)]
pub struct ConditionalBlocks {
    blocks: BTreeMap<(u8, u8), Array2<C64>>,
}

/// Which sensor registered the first photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    One,
    Two,
}

impl ConditionalBlocks {
    pub fn get(&self, j: u8, jp: u8) -> &Array2<C64> {
        &self.blocks[&(j, jp)]
    }
}

/// Extracts the four conditioned blocks from a solved two-sensor set.
///
/// For detector 1 the first index pair is fixed at (1,1) and the map runs
/// over the second sensor's indices; for detector 2 (the negative-delay
/// branch) the roles are exchanged.
pub fn conditional_state(aux: &AuxMatrixSet, which: Detector) -> Result<ConditionalBlocks> {
    if aux.sensor_count() != 2 {
        return Err(Error::SensorCount {
            got: aux.sensor_count(),
            reason: "conditional blocks require exactly two sensors",
        });
    }
    let mut blocks = BTreeMap::new();
    for j in 0..2u8 {
        for jp in 0..2u8 {
            let idx = match which {
                Detector::One => MultiIndex(vec![(1, 1), (j, jp)]),
                Detector::Two => MultiIndex(vec![(j, jp), (1, 1)]),
            };
            blocks.insert((j, jp), aux.entry(&idx)?.clone());
        }
    }
    Ok(ConditionalBlocks { blocks })
}

/// Difference quotient (e^{a tau} - e^{b tau}) / (a - b), switching to a
/// three-term series in z = (a - b) tau below the guard so the removable
/// singularity at a = b stays at full precision.
fn dq(a: C64, b: C64, tau: f64) -> C64 {
    let z = (a - b) * cr(tau);
    if z.norm() < tol::DQ_SERIES_SWITCH {
        let series = cr(1.0) + z / cr(2.0) + z * z / cr(6.0);
        (b * cr(tau)).exp() * cr(tau) * series
    } else {
        ((a * cr(tau)).exp() - (b * cr(tau)).exp()) / (a - b)
    }
}

/// Derivative of [`dq`] with respect to b:
/// `d/db dq = (dq - tau e^{b tau}) / (a - b)`, series-guarded like [`dq`].
fn dq_db(a: C64, b: C64, tau: f64) -> C64 {
    let z = (a - b) * cr(tau);
    if z.norm() < tol::DQ_SERIES_SWITCH {
        let series = cr(0.5) + z / cr(6.0) + z * z / cr(24.0);
        (b * cr(tau)).exp() * cr(tau * tau) * series
    } else {
        (dq(a, b, tau) - cr(tau) * (b * cr(tau)).exp()) / (a - b)
    }
}

/// Spectral decomposition of the emitter generator with the contractions
/// needed by the closed-form delay integrals, built once per (blocks,
/// observation sensor) pair and reused across delays.
pub struct SpectralEngine {
    /// Generator eigenvalues.
    lam: Array1<C64>,
    /// trace[a2 unvec(V[:, j])] per right eigenvector.
    wtr: Array1<C64>,
    /// V^-1 (conj(a2) kron I) V: right multiplication by a2^dag in
    /// eigencoordinates.
    beta: Array2<C64>,
    /// V^-1 vec(block(0,1)): first-order source coefficients.
    c1: Array1<C64>,
    /// V^-1 vec(block(0,0)): second-order source coefficients.
    c0: Array1<C64>,
    /// Observation filter linewidth G2 (1/ps) and center w2 (rad/ps).
    gamma2: f64,
    omega2: f64,
    /// tr[block(1,1)], the tau = 0 coincidence.
    i0_amplitude: f64,
}

impl SpectralEngine {
    /// Diagonalizes the emitter generator and contracts the conditioned
    /// blocks with the observation sensor's emission operator.
    pub fn new(
        model: &EmitterModel,
        blocks: &ConditionalBlocks,
        observe: &SensorSpec,
    ) -> Result<Self> {
        let l0 = model.liouvillian()?;
        let a2 = model.emission_op(&observe.emission_op_name)?;
        let d = model.dim;
        let n = d * d;

        let (lam, vr) = l0.matrix().to_owned().eig()?;
        let vinv = vr.inv().map_err(|e| Error::Lapack(e.to_string()))?;

        let mut wtr = Array1::<C64>::zeros(n);
        for j in 0..n {
            let mode = devectorize(vr.column(j))?;
            wtr[j] = trace(a2.dot(&mode).view());
        }

        let right_mult = kron(&a2.mapv(|z| z.conj()), &Array2::<C64>::eye(d));
        let beta = vinv.dot(&right_mult).dot(&vr);
        let c1 = vinv.dot(&vectorize(blocks.get(0, 1).view()));
        let c0 = vinv.dot(&vectorize(blocks.get(0, 0).view()));

        let tr11 = trace(blocks.get(1, 1).view());
        let bound = (tol::IM_RESIDUE_REL * tr11.re.abs()).max(tol::IM_RESIDUE_ABS);
        if tr11.im.abs() > bound {
            return Err(Error::ImaginaryResidue {
                context: "coincidence block trace",
                imag: tr11.im.abs(),
                bound,
            });
        }

        Ok(Self {
            lam,
            wtr,
            beta,
            c1,
            c0,
            gamma2: observe.gamma,
            omega2: observe.omega,
            i0_amplitude: tr11.re,
        })
    }

    /// Zeroth-order term: the zero-delay coincidence decaying at the
    /// filter rate, `e^{-G2 tau} tr[block(1,1)]`. Exact closed form.
    pub fn i0(&self, tau: f64) -> f64 {
        (-self.gamma2 * tau).exp() * self.i0_amplitude
    }

    /// tr[a2 block(0,1)(t)] via the spectral expansion; the integrand of
    /// the first-order term.
    pub fn first_order_trace(&self, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.lam.len() {
            acc += self.wtr[j] * self.c1[j] * (self.lam[j] * cr(t)).exp();
        }
        acc
    }

    /// tr[a2(s) block(0,0)(t1) a2^dag] via the spectral expansion; the
    /// integrand of the second-order term.
    pub fn second_order_trace(&self, t1: f64, s: f64) -> C64 {
        let n = self.lam.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            if self.wtr[j].norm() == 0.0 {
                continue;
            }
            let ej = self.wtr[j] * (self.lam[j] * cr(s)).exp();
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..n {
                inner += self.beta[[j, k]] * self.c0[k] * (self.lam[k] * cr(t1)).exp();
            }
            acc += ej * inner;
        }
        acc
    }

    /// First-order term in closed form:
    /// `2 Im sum_j wtr_j c1_j (e^{(mu_j - G2) tau} - e^{-G2 tau}) / mu_j`
    /// with `mu_j = G2/2 + i w2 + lambda_j`; equals the time integral
    /// exactly, removable pole at mu_j = 0 included.
    pub fn i1(&self, tau: f64) -> f64 {
        let g2 = self.gamma2;
        let iw2 = C64::new(0.0, self.omega2);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.lam.len() {
            let w = self.wtr[j] * self.c1[j];
            if w.norm() == 0.0 {
                continue;
            }
            let mu = cr(g2 / 2.0) + iw2 + self.lam[j];
            // (e^{(mu - G2) tau} - e^{-G2 tau}) / mu = dq(mu - G2, -G2).
            acc += w * dq(mu - cr(g2), cr(-g2), tau);
        }
        2.0 * acc.im
    }

    /// Second-order term in closed form: a double sum over generator
    /// modes with kernel
    /// `K_jk = [dq(l_k, mu_j - G2, tau) - dq(l_k, -G2, tau)] / mu_j`;
    /// the 1/mu_j pole is removable and handled by the b-derivative of
    /// the difference quotient.
    pub fn i2(&self, tau: f64) -> f64 {
        let g2 = self.gamma2;
        let iw2 = C64::new(0.0, self.omega2);
        let n = self.lam.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            if self.wtr[j].norm() == 0.0 {
                continue;
            }
            let mu = cr(g2 / 2.0) + iw2 + self.lam[j];
            let small_mu = mu.norm() < 1e-8;
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..n {
                let w = self.beta[[j, k]] * self.c0[k];
                if w.norm() == 0.0 {
                    continue;
                }
                let lk = self.lam[k];
                let kernel = if small_mu {
                    dq_db(lk, cr(-g2), tau)
                } else {
                    (dq(lk, mu - cr(g2), tau) - dq(lk, cr(-g2), tau)) / mu
                };
                inner += w * kernel;
            }
            acc += self.wtr[j] * inner;
        }
        2.0 * acc.re
    }

    /// Nested Simpson quadrature of the first-order integral with 2n+1
    /// nodes, using the exact spectral integrand; reference for the
    /// closed form.
    pub fn i1_simpson(&self, tau: f64, n: usize) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let nodes = 2 * n + 1;
        let h = tau / (nodes - 1) as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..nodes {
            let t = k as f64 * h;
            let w = simpson_weight(k, nodes - 1);
            let phase = C64::new(-self.gamma2 * (tau - t / 2.0), self.omega2 * t).exp();
            acc += cr(w) * phase * self.first_order_trace(t);
        }
        2.0 * (acc * cr(h / 3.0)).im
    }

    /// Nested Simpson quadrature of the second-order simplex integral
    /// with (2n+1)^2 nodes; reference for the closed form.
    pub fn i2_simpson(&self, tau: f64, n: usize) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let nodes = 2 * n + 1;
        let h2 = tau / (nodes - 1) as f64;
        let mut outer = C64::new(0.0, 0.0);
        for k2 in 1..nodes {
            let t2 = k2 as f64 * h2;
            let h1 = t2 / (nodes - 1) as f64;
            let mut inner = C64::new(0.0, 0.0);
            for k1 in 0..nodes {
                let t1 = k1 as f64 * h1;
                let phase = C64::new(
                    -self.gamma2 * (tau - (t2 + t1) / 2.0),
                    self.omega2 * (t2 - t1),
                )
                .exp();
                inner += cr(simpson_weight(k1, nodes - 1))
                    * phase
                    * self.second_order_trace(t1, t2 - t1);
            }
            outer += cr(simpson_weight(k2, nodes - 1)) * inner * cr(h1 / 3.0);
        }
        2.0 * (outer * cr(h2 / 3.0)).re
    }

    /// Saturated Laplace transform `F(G2/2 + i w2)` of the first-order
    /// trace over modes decaying faster than the filter, and the summed
    /// coefficient fraction of the skipped slower modes. Fast-emitter
    /// diagnostic.
    pub fn fast_emitter_transform(&self) -> (C64, f64) {
        let s = C64::new(self.gamma2 / 2.0, self.omega2);
        let mut f = C64::new(0.0, 0.0);
        let mut kept = 0.0;
        let mut skipped = 0.0;
        for j in 0..self.lam.len() {
            let coef = self.wtr[j] * self.c1[j];
            if self.lam[j].re + s.re < 0.0 {
                f += -coef / (self.lam[j] + s);
                kept += coef.norm();
            } else {
                skipped += coef.norm();
            }
        }
        let total = kept + skipped;
        (f, if total > 0.0 { skipped / total } else { 0.0 })
    }

    /// Fast-emitter envelope: once every emitter rate exceeds G2/2 and
    /// tau is past the emitter transient, the first-order integral
    /// saturates and `I1(tau) ~ 2 e^{-G2 tau} Im F`. Diagnostic only.
    pub fn i1_fast_emitter(&self, tau: f64) -> f64 {
        let (f, _) = self.fast_emitter_transform();
        2.0 * (-self.gamma2 * tau).exp() * f.im
    }

    /// Slow-emitter form: the emitter coherence is modeled by a single
    /// dominant mode with decay rate gamma_sys and frequency omega_sys,
    /// giving a damped oscillation that vanishes at tau = 0,
    ///
    /// ```text
    /// I1 ~ 2 Im[ (e^{-(G2+g_sys) tau/2 - i(w_sys-w2) tau} - e^{-G2 tau})
    ///            / ((G2-g_sys)/2 + i(w2-w_sys)) * tr(a2 block(0,1)(tau)) ]
    /// ```
    ///
    /// The single-mode envelope is taken as decaying. Diagnostic only.
    pub fn i1_slow_emitter(&self, tau: f64, gamma_sys: f64, omega_sys: f64) -> f64 {
        let g2 = self.gamma2;
        let num = C64::new(
            -(g2 + gamma_sys) * tau / 2.0,
            -(omega_sys - self.omega2) * tau,
        )
        .exp()
            - cr((-g2 * tau).exp());
        let den = C64::new((g2 - gamma_sys) / 2.0, self.omega2 - omega_sys);
        let ftr = self.first_order_trace(tau);
        2.0 * (num / den * ftr).im
    }

    /// Long-delay approximant of the second-order term: the inner time
    /// integral is replaced by its stationary limit, leaving
    ///
    /// ```text
    /// I2 ~ (2/G2) Re sum_jk wtr_j beta_jk c0_k [A_jk - e^{-G2 tau} B_jk]
    /// A_jk = dq(p + l_k, l_k, tau),  B_jk = dq(p + G2/2 + l_k, l_k, tau)
    /// p = i w2 + l_j - l_k / 2
    /// ```
    ///
    /// Diagnostic only; its deviation from the exact form at intermediate
    /// delays is recorded by tests.
    pub fn i2_asymptotic(&self, tau: f64) -> f64 {
        let g2 = self.gamma2;
        let iw2 = C64::new(0.0, self.omega2);
        let decay = cr((-g2 * tau).exp());
        let n = self.lam.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            if self.wtr[j].norm() == 0.0 {
                continue;
            }
            for k in 0..n {
                let w = self.beta[[j, k]] * self.c0[k];
                if w.norm() == 0.0 {
                    continue;
                }
                let lk = self.lam[k];
                let p = iw2 + self.lam[j] - lk / cr(2.0);
                let a = dq(p + lk, lk, tau);
                let b = dq(p + cr(g2 / 2.0) + lk, lk, tau);
                acc += self.wtr[j] * w * (a - decay * b);
            }
        }
        2.0 / g2 * acc.re
    }
}

fn simpson_weight(k: usize, last: usize) -> f64 {
    if k == 0 || k == last {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Everything needed to evaluate the delay-resolved correlation for one
/// ordered sensor pair: conditioned blocks for both detection orders and
/// one spectral engine per order.
pub struct G2TauEvaluator {
    forward: SpectralEngine,
    backward: SpectralEngine,
    n1: f64,
    n2: f64,
}

impl G2TauEvaluator {
    /// Solves the two-sensor hierarchy and prepares both delay branches.
    pub fn new(model: &EmitterModel, s1: &SensorSpec, s2: &SensorSpec) -> Result<Self> {
        let aux = solve_hierarchy(model, &[s1.clone(), s2.clone()])?;
        Self::from_aux(model, s1, s2, &aux)
    }

    /// Same as [`G2TauEvaluator::new`] from an already solved set.
    pub fn from_aux(
        model: &EmitterModel,
        s1: &SensorSpec,
        s2: &SensorSpec,
        aux: &AuxMatrixSet,
    ) -> Result<Self> {
        let n1 = aux.diagonal_trace(0)?;
        let n2 = aux.diagonal_trace(1)?;
        let floor = tol::DENOM_FLOOR_REL * n1.max(n2);
        for (n, spec) in [(n1, s1), (n2, s2)] {
            if n <= tol::DENOM_FLOOR_ABS || n <= floor {
                return Err(Error::VanishingDenominator {
                    value: n,
                    omega: spec.omega,
                    floor: floor.max(tol::DENOM_FLOOR_ABS),
                });
            }
        }
        let blocks1 = conditional_state(aux, Detector::One)?;
        let blocks2 = conditional_state(aux, Detector::Two)?;
        Ok(Self {
            forward: SpectralEngine::new(model, &blocks1, s2)?,
            backward: SpectralEngine::new(model, &blocks2, s1)?,
            n1,
            n2,
        })
    }

    /// Filtered populations (<n1>, <n2>) entering the normalization.
    pub fn populations(&self) -> (f64, f64) {
        (self.n1, self.n2)
    }

    /// Normalization factor nu = 1 / (<n1> <n2>).
    pub fn nu(&self) -> f64 {
        1.0 / (self.n1 * self.n2)
    }

    /// Unnormalized components (I0, I1, I2) at one delay; the sign of tau
    /// selects the detection order.
    pub fn components(&self, tau: f64) -> [f64; 3] {
        let (engine, t) = if tau >= 0.0 {
            (&self.forward, tau)
        } else {
            (&self.backward, -tau)
        };
        [engine.i0(t), engine.i1(t), engine.i2(t)]
    }

    /// Normalized correlation at one delay.
    pub fn g2(&self, tau: f64) -> f64 {
        let [i0, i1, i2] = self.components(tau);
        self.nu() * (i0 + i1 + i2)
    }

    /// Per-order spectral engines, for diagnostics and asymptotics.
    pub fn engine(&self, which: Detector) -> &SpectralEngine {
        match which {
            Detector::One => &self.backward,
            Detector::Two => &self.forward,
        }
    }
}

/// Delay-resolved correlation over a delay grid (ps). Negative delays
/// probe the reversed detection order. Normalized components are attached
/// when `with_components` is set.
pub fn g2_tau(
    model: &EmitterModel,
    s1: &SensorSpec,
    s2: &SensorSpec,
    taus: &[f64],
    with_components: bool,
) -> Result<CorrelationCurve> {
    let eval = G2TauEvaluator::new(model, s1, s2)?;
    let nu = eval.nu();
    let mut values = Vec::with_capacity(taus.len());
    let mut comps = Vec::with_capacity(taus.len());
    for &tau in taus {
        let c = eval.components(tau);
        values.push(nu * (c[0] + c[1] + c[2]));
        if with_components {
            comps.push([nu * c[0], nu * c[1], nu * c[2]]);
        }
    }
    let mut curve = CorrelationCurve::new(taus.to_vec(), values)?;
    if with_components {
        curve.components = Some(comps);
    }
    Ok(curve)
}
