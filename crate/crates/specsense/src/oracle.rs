// SPDX-License-Identifier: MIT

//! Explicit two-level-sensor route to filtered photon statistics, used as
//! an independent cross-check of the auxiliary-operator hierarchy.
//!
//! Each detection filter is represented physically: a two-level sensor at
//! frequency w_m (rad/ps) decaying at G_m (1/ps), coupled to the emitter
//! through H_c = eps (a_m s_m^dag + a_m^dag s_m) with a small coupling
//! eps. Filtered observables then follow from the joint emitter (x)
//! sensors steady state (del Valle, Gonzalez-Tudela, Laussy, Tejedor &
//! Hartmann, Phys. Rev. Lett. 109, 183601 (2012)):
//!
//! ```text
//! S(w_1)     = G_1 / (2 pi eps^2) tr[n_1 rho_ss]
//! g^(M)(0)   = tr[n_1 .. n_M rho_ss] / prod_m tr[n_m rho_ss]
//! g^(2)(tau) = tr[n_2 e^{L tau}(s_1 rho_ss s_1^dag)] / (<n_1><n_2>),
//! ```
//!
//! with the sensor-exchanged expression for tau < 0. The route is exact in
//! the joint dynamics but carries a systematic error growing with eps
//! (linearly for the spectrum, quadratically for correlations), while the
//! hierarchy is free of eps altogether; agreement of the two within
//! [`tol::ORACLE_EQUIVALENCE`] at small eps therefore validates both code
//! paths, which share only the Liouville-space primitives.
//!
//! Delayed coincidences must collapse the first sensor with its lowering
//! operator, `s_1 rho s_1^dag`; multiplying by the number operator instead
//! gives the same trace at tau = 0 only and drifts for tau > 0.
//! [`JointSystem::normal_order_check`] quantifies that drift.
//!
//! The constructor solves the joint steady state eagerly and in graded
//! units, where each density-matrix entry is divided by eps raised to
//! its total sensor excitation count; without that rescaling the
//! coincidence sector, of size eps^2M, drowns in the absolute roundoff
//! floor of a plain kernel solve long before eps is small enough for
//! the systematics to vanish. Every observable afterwards is cheap
//! except the delayed correlation, which exponentiates the joint
//! generator once per distinct step size. A uniformly spaced delay grid
//! costs a single matrix exponential.

use std::cell::RefCell;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::hierarchy::SensorSpec;
use crate::liouville::{
    build_liouvillian, cr, dagger, kron, vectorize, LindbladChannel,
    Propagator, Superoperator, C64,
};
use crate::timecorr::CorrelationCurve;
use crate::tol;

/// Largest supported sensor count on the joint space. Beyond two delays
/// the correlations need more bookkeeping than a single propagation, and
/// the joint dimension doubles per sensor; three covers every cross-check
/// the hierarchy exposes.
pub const MAX_JOINT_SENSORS: usize = 3;

/// Default cap on the joint Hilbert dimension d * 2^M. The dense joint
/// Liouvillian holds (d * 2^M)^4 complex entries, so 128 corresponds to a
/// 4 GiB generator; raise it only with the memory to match.
pub const DEFAULT_JOINT_DIM_CAP: usize = 128;

/// Cached stepped propagators are reused when a requested interval is an
/// integer multiple of the cached step within this relative tolerance,
/// which absorbs last-ulp jitter in uniformly spaced delay grids.
const STEP_MATCH_REL: f64 = 1e-12;

/// Upper bound on how many cached-step applications may replace one
/// matrix exponential; beyond this the accumulated applications would
/// cost more than a fresh factorization.
const STEP_REPEAT_MAX: f64 = 1e6;

/// Per-entry magnitude pattern of the joint steady state, used to solve
/// it in graded units: a density-matrix entry whose two Hilbert indices
/// hold g sensor excitations in total carries a factor eps^g, so the
/// 2M-quanta coincidence sector sits eps^2M below the emitter block. A
/// plain solve buries those layers under its absolute roundoff floor
/// once eps^2M falls beneath it, which is exactly the weak-coupling
/// regime the cross-checks probe; solving with these scales keeps every
/// sector at full relative accuracy. Couplings at or above one rad/ps
/// need no grading and would invert it, so the base saturates at one.
fn sector_scales(m: usize, emitter_dim: usize, eps: f64) -> Vec<f64> {
    let dim = emitter_dim << m;
    let mask = (1usize << m) - 1;
    let base = eps.min(1.0);
    let mut pow = vec![1.0_f64; 2 * m + 1];
    for g in 1..=2 * m {
        pow[g] = pow[g - 1] * base;
    }
    let grade = |i: usize| (i & mask).count_ones() as usize;
    let mut scale = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            scale.push(pow[grade(i) + grade(j)]);
        }
    }
    scale
}

/// Two-level sensor lowering operator |0><1|.
fn sensor_lowering() -> Array2<C64> {
    let mut s = Array2::<C64>::zeros((2, 2));
    s[[0, 1]] = cr(1.0);
    s
}

/// Embeds `op` into the joint space at `slot`: 0 is the emitter factor,
/// slot m >= 1 is sensor m - 1. Tensor order is emitter (x) sensor 1 (x)
/// sensor 2 (x) ..., so sensor 1 owns the most significant sensor bit.
fn lift(op: &Array2<C64>, slot: usize, m: usize, emitter_dim: usize) -> Array2<C64> {
    let eye2 = Array2::<C64>::eye(2);
    let mut out = if slot == 0 {
        op.clone()
    } else {
        Array2::<C64>::eye(emitter_dim)
    };
    for k in 0..m {
        out = if slot == k + 1 {
            kron(&out, op)
        } else {
            kron(&out, &eye2)
        };
    }
    out
}

/// Imaginary-residue policy for quantities that are real on paper: the
/// imaginary part may not exceed [`tol::IM_RESIDUE_REL`] relative to the
/// real part, with an absolute floor of [`tol::IM_RESIDUE_ABS`] so that
/// noise-level traces do not trip the check before a denominator guard
/// can report the real problem.
fn real_part(z: C64, context: &'static str) -> Result<f64> {
    let bound = (tol::IM_RESIDUE_REL * z.re.abs()).max(tol::IM_RESIDUE_ABS);
    if !z.im.is_finite() || z.im.abs() > bound {
        return Err(Error::ImaginaryResidue {
            context,
            imag: z.im.abs(),
            bound,
        });
    }
    Ok(z.re)
}

/// Comparison of the two operator orderings behind a delayed coincidence.
///
/// `trace_collapsed` propagates the collapsed state `s_1 rho s_1^dag`;
/// `trace_numberop` propagates `rho n_1` instead and reports the real part
/// of the resulting (generally complex) trace. The two agree at tau = 0
/// and separate for tau > 0, which is why the collapsed form is the only
/// one used for physics output.
#[derive(Debug, Clone, Copy)]
pub struct NormalOrderReport {
    /// Delay at which both orderings were evaluated (ps).
    pub tau: f64,
    /// tr[n_2 e^{L tau}(s_1 rho s_1^dag)], unnormalized.
    pub trace_collapsed: f64,
    /// Re tr[n_2 e^{L tau}(rho n_1)], unnormalized.
    pub trace_numberop: f64,
    /// Signed difference `trace_collapsed - trace_numberop`.
    pub delta: f64,
}

/// Emitter plus explicit sensors with the joint steady state solved.
///
/// Holds the dense joint generator, so it is deliberately heavyweight;
/// sweeps over coupling strengths or sensor placements should build one
/// `JointSystem` per parameter point (they are independent, and the type
/// is not `Sync` because delayed correlations cache a stepped propagator
/// behind a `RefCell`).
pub struct JointSystem {
    m: usize,
    emitter_dim: usize,
    dim: usize,
    eps: f64,
    sensors: Vec<SensorSpec>,
    liouvillian: Superoperator,
    steady: Array2<C64>,
    lowering: Vec<Array2<C64>>,
    populations: Vec<f64>,
    validity_bound: f64,
    warning: Option<String>,
    step_cache: RefCell<Option<(f64, Propagator)>>,
}

/// Builds the joint system with the default dimension cap
/// [`DEFAULT_JOINT_DIM_CAP`].
pub fn build_joint(
    model: &EmitterModel,
    sensors: &[SensorSpec],
    eps: f64,
) -> Result<JointSystem> {
    build_joint_with_cap(model, sensors, eps, DEFAULT_JOINT_DIM_CAP)
}

/// Builds the joint emitter-sensor system and solves its steady state.
///
/// `eps` is the emitter-sensor coupling in rad/ps and must be positive:
/// the spectrum normalization divides by eps^2, and eps = 0 decouples the
/// sensors entirely. Construction fails if the joint dimension d * 2^M
/// exceeds `cap`. A successful build may still carry a validity warning,
/// see [`JointSystem::validity_warning`].
pub fn build_joint_with_cap(
    model: &EmitterModel,
    sensors: &[SensorSpec],
    eps: f64,
    cap: usize,
) -> Result<JointSystem> {
    model.validate()?;
    let m = sensors.len();
    if m == 0 {
        return Err(Error::SensorCount {
            got: 0,
            reason: "joint construction requires at least one sensor",
        });
    }
    if m > MAX_JOINT_SENSORS {
        return Err(Error::SensorCount {
            got: m,
            reason: "joint construction supports at most three sensors",
        });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be positive and finite, got {eps}"),
        });
    }
    let emitter_dim = model.dim;
    let dim = emitter_dim << m;
    if dim > cap {
        return Err(Error::InvalidParameter {
            name: "joint dimension",
            reason: format!(
                "{emitter_dim} emitter levels with {m} sensors give joint \
                 dimension {dim}, above the cap {cap}"
            ),
        });
    }

    let sig = sensor_lowering();
    let num = dagger(sig.view()).dot(&sig);

    let mut h = lift(&model.hamiltonian, 0, m, emitter_dim);
    let mut channels: Vec<LindbladChannel> = model
        .channels
        .iter()
        .map(|ch| LindbladChannel::new(ch.rate, lift(&ch.jump, 0, m, emitter_dim)))
        .collect();
    let mut lowering = Vec::with_capacity(m);
    for (k, s) in sensors.iter().enumerate() {
        let a = model.emission_op(&s.emission_op_name)?;
        h.scaled_add(cr(s.omega), &lift(&num, k + 1, m, emitter_dim));
        let raise =
            lift(a, 0, m, emitter_dim).dot(&lift(&dagger(sig.view()), k + 1, m, emitter_dim));
        let coupling = &raise + &dagger(raise.view());
        h.scaled_add(cr(eps), &coupling);
        let low = lift(&sig, k + 1, m, emitter_dim);
        channels.push(LindbladChannel::new(s.gamma, low.clone()));
        lowering.push(low);
    }

    let liouvillian = build_liouvillian(h.view(), &channels)?;
    let steady = liouvillian.scaled_steady_state(&sector_scales(m, emitter_dim, eps))?;

    let mut populations = vec![0.0; m];
    for i in 0..dim {
        let bits = i & ((1 << m) - 1);
        for (k, p) in populations.iter_mut().enumerate() {
            if (bits >> (m - 1 - k)) & 1 == 1 {
                *p += steady[[i, i]].re;
            }
        }
    }

    let gamma_q = model
        .channels
        .iter()
        .map(|ch| ch.rate)
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let gamma_min = sensors
        .iter()
        .map(|s| s.gamma)
        .fold(f64::INFINITY, f64::min);
    let validity_bound = (gamma_min * gamma_q / 2.0).sqrt();
    let mut notes = Vec::new();
    if eps > tol::ORACLE_VALIDITY_FRACTION * validity_bound {
        notes.push(format!(
            "eps = {eps:.3e} rad/ps exceeds {} * sqrt(min Gamma * gamma_Q / 2) \
             = {:.3e}, so the weak-coupling systematics need not be small",
            tol::ORACLE_VALIDITY_FRACTION,
            tol::ORACLE_VALIDITY_FRACTION * validity_bound,
        ));
    }
    let pop_max = populations.iter().cloned().fold(0.0, f64::max);
    if pop_max > tol::ORACLE_POPULATION_GUARD {
        notes.push(format!(
            "sensor occupation {pop_max:.3e} exceeds {}; the detectors are \
             saturating and filtered moments lose their meaning",
            tol::ORACLE_POPULATION_GUARD,
        ));
    }
    let warning = if notes.is_empty() {
        None
    } else {
        Some(notes.join("; "))
    };

    Ok(JointSystem {
        m,
        emitter_dim,
        dim,
        eps,
        sensors: sensors.to_vec(),
        liouvillian,
        steady,
        lowering,
        populations,
        validity_bound,
        warning,
        step_cache: RefCell::new(None),
    })
}

impl JointSystem {
    /// Number of sensors M.
    pub fn sensor_count(&self) -> usize {
        self.m
    }

    /// Joint Hilbert dimension d * 2^M.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Emitter-sensor coupling (rad/ps).
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The sensors the system was built with, in slot order.
    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    /// Full joint Lindblad generator.
    pub fn liouvillian(&self) -> &Superoperator {
        &self.liouvillian
    }

    /// Joint steady state (trace one, Hermitian, positive checked).
    pub fn steady_state(&self) -> ArrayView2<'_, C64> {
        self.steady.view()
    }

    /// Steady occupation tr[n_m rho_ss] of each sensor, in slot order.
    /// Scales as eps^2 in the perturbative regime.
    pub fn sensor_populations(&self) -> &[f64] {
        &self.populations
    }

    /// Weak-coupling scale sqrt(min_m Gamma_m * gamma_Q / 2) where gamma_Q
    /// is the smallest positive emitter channel rate; the construction is
    /// perturbative while eps stays well below this.
    pub fn validity_bound(&self) -> f64 {
        self.validity_bound
    }

    /// Warning accumulated at build time when eps exceeds
    /// [`tol::ORACLE_VALIDITY_FRACTION`] of [`Self::validity_bound`] or a
    /// sensor occupation exceeds [`tol::ORACLE_POPULATION_GUARD`]. The
    /// numbers such a run produces are still well defined, they just stop
    /// approximating the eps -> 0 filtered statistics.
    pub fn validity_warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Whether sensor `k` (0-based) is excited in joint basis state
    /// `index`. Sensor bits are minor, sensor 1 most significant.
    fn sensor_bit(&self, index: usize, sensor: usize) -> bool {
        let bits = index & ((1 << self.m) - 1);
        (bits >> (self.m - 1 - sensor)) & 1 == 1
    }

    /// Trace of `n_sensor` against a vectorized joint operator.
    fn masked_vec_trace(&self, v: ArrayView1<'_, C64>, sensor: usize) -> C64 {
        let d = self.dim;
        let mut z = C64::new(0.0, 0.0);
        for i in 0..d {
            if self.sensor_bit(i, sensor) {
                z += v[i * d + i];
            }
        }
        z
    }

    /// Sensor population with the vanishing-denominator guard applied,
    /// for use wherever the population divides a correlation.
    fn checked_population(&self, sensor: usize) -> Result<f64> {
        let scale = (0..self.dim)
            .map(|i| self.steady[[i, i]].re)
            .fold(0.0, f64::max);
        let floor = (tol::DENOM_FLOOR_REL * scale).max(tol::DENOM_FLOOR_ABS);
        let p = self.populations[sensor];
        if !(p > floor) {
            return Err(Error::VanishingDenominator {
                value: p,
                omega: self.sensors[sensor].omega,
                floor,
            });
        }
        Ok(p)
    }

    /// Collapsed joint state `s_k rho_ss s_k^dag` after a detection on
    /// sensor `k`.
    fn collapse(&self, sensor: usize) -> Array2<C64> {
        let l = &self.lowering[sensor];
        l.dot(&self.steady).dot(&dagger(l.view()))
    }

    /// Propagates a vectorized state by `gap > 0`, reusing the cached
    /// stepped propagator whenever `gap` is an integer multiple of the
    /// cached step; otherwise exponentiates the generator at `gap` and
    /// caches that.
    fn advance(&self, v: Array1<C64>, gap: f64) -> Result<Array1<C64>> {
        {
            let cache = self.step_cache.borrow();
            if let Some((h, p)) = cache.as_ref() {
                let k = (gap / h).round();
                if k >= 1.0
                    && k <= STEP_REPEAT_MAX
                    && (gap - k * h).abs() <= STEP_MATCH_REL * gap
                {
                    let mut out = v;
                    for _ in 0..k as u64 {
                        out = p.apply_vec(out.view())?;
                    }
                    return Ok(out);
                }
            }
        }
        let p = self.liouvillian.expm(gap)?;
        let out = p.apply_vec(v.view())?;
        *self.step_cache.borrow_mut() = Some((gap, p));
        Ok(out)
    }

    /// Walks an increasing grid of positive delays, recording the
    /// `observe` sensor's population trace at each point.
    fn propagate_samples(
        &self,
        phi0: &Array2<C64>,
        observe: usize,
        offsets: &[f64],
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(offsets.len());
        if offsets.is_empty() {
            return Ok(out);
        }
        let mut v = vectorize(phi0.view());
        let mut t = 0.0;
        for &target in offsets {
            v = self.advance(v, target - t)?;
            t = target;
            out.push(real_part(
                self.masked_vec_trace(v.view(), observe),
                "propagated joint coincidence trace",
            )?);
        }
        Ok(out)
    }

    /// Filtered power spectrum value S = Gamma_1 / (2 pi eps^2) <n_1>.
    ///
    /// Requires exactly one sensor so the reading is not polluted by other
    /// detectors back-acting on the emitter.
    pub fn oracle_spectrum(&self) -> Result<f64> {
        if self.m != 1 {
            return Err(Error::SensorCount {
                got: self.m,
                reason: "the spectrum reading requires exactly one sensor",
            });
        }
        let norm = self.sensors[0].gamma / (2.0 * std::f64::consts::PI * self.eps * self.eps);
        Ok(norm * self.populations[0])
    }

    /// Zero-delay M-sensor intensity correlation
    /// tr[n_1 .. n_M rho_ss] / prod_m tr[n_m rho_ss].
    ///
    /// At zero delay the number-operator product and the normally ordered
    /// correlator have identical traces, so no collapse is needed.
    pub fn oracle_gm_zero(&self) -> Result<f64> {
        if self.m < 2 {
            return Err(Error::SensorCount {
                got: self.m,
                reason: "intensity correlations require at least two sensors",
            });
        }
        let mut denom = 1.0;
        for k in 0..self.m {
            denom *= self.checked_population(k)?;
        }
        let num: f64 = (0..self.dim)
            .filter(|&i| (0..self.m).all(|k| self.sensor_bit(i, k)))
            .map(|i| self.steady[[i, i]].re)
            .sum();
        Ok(num / denom)
    }

    /// Delayed cross correlation g2(tau) over a strictly increasing delay
    /// grid (ps), by quantum regression on the joint space: collapse
    /// sensor 1 and watch sensor 2 for tau > 0, the sensor-exchanged
    /// expression for tau < 0.
    ///
    /// Every distinct step size in the grid costs one dense matrix
    /// exponential of the joint generator; a uniform grid costs exactly
    /// one. Values carry no components (that decomposition belongs to the
    /// perturbative route).
    pub fn oracle_g2_tau(&self, taus: &[f64]) -> Result<CorrelationCurve> {
        if self.m != 2 {
            return Err(Error::SensorCount {
                got: self.m,
                reason: "delayed cross correlations require exactly two sensors",
            });
        }
        if taus.is_empty() {
            return Err(Error::InvalidParameter {
                name: "taus",
                reason: "delay grid must not be empty".to_string(),
            });
        }
        if taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                context: "oracle delay grid",
            });
        }
        for w in taus.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter {
                    name: "taus",
                    reason: format!(
                        "delay grid must be strictly increasing, got {} after {}",
                        w[1], w[0]
                    ),
                });
            }
        }
        let nu = 1.0 / (self.checked_population(0)? * self.checked_population(1)?);

        let pos: Vec<f64> = taus.iter().copied().filter(|&t| t > 0.0).collect();
        let neg: Vec<f64> = taus.iter().rev().map(|&t| -t).filter(|&t| t > 0.0).collect();
        let fwd = self.propagate_samples(&self.collapse(0), 1, &pos)?;
        let bwd = self.propagate_samples(&self.collapse(1), 0, &neg)?;

        let mut values = Vec::with_capacity(taus.len());
        let mut n_neg = neg.len();
        let mut n_pos = 0;
        for &tau in taus {
            if tau < 0.0 {
                n_neg -= 1;
                values.push(nu * bwd[n_neg]);
            } else if tau > 0.0 {
                values.push(nu * fwd[n_pos]);
                n_pos += 1;
            } else {
                let zero = real_part(
                    self.masked_vec_trace(vectorize(self.collapse(0).view()).view(), 1),
                    "zero-delay joint coincidence trace",
                )?;
                values.push(nu * zero);
            }
        }
        CorrelationCurve::new(taus.to_vec(), values)
    }

    /// Evaluates the delayed coincidence trace in both operator orderings
    /// at `tau >= 0` ps; see [`NormalOrderReport`]. Reuses the cached
    /// stepped propagator when `tau` is a multiple of its step.
    pub fn normal_order_check(&self, tau: f64) -> Result<NormalOrderReport> {
        if self.m != 2 {
            return Err(Error::SensorCount {
                got: self.m,
                reason: "the ordering comparison requires exactly two sensors",
            });
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must be nonnegative and finite, got {tau}"),
            });
        }
        let number0 = dagger(self.lowering[0].view()).dot(&self.lowering[0]);
        let good = vectorize(self.collapse(0).view());
        let bad = vectorize(self.steady.dot(&number0).view());
        let (gv, bv) = if tau > 0.0 {
            (self.advance(good, tau)?, self.advance(bad, tau)?)
        } else {
            (good, bad)
        };
        let trace_collapsed = real_part(
            self.masked_vec_trace(gv.view(), 1),
            "collapsed-ordering coincidence trace",
        )?;
        // The number-operator branch propagates a non-Hermitian operator,
        // so its trace is complex in general; the real part is what the
        // collapsed branch must be compared against.
        let trace_numberop = self.masked_vec_trace(bv.view(), 1).re;
        Ok(NormalOrderReport {
            tau,
            trace_collapsed,
            trace_numberop,
            delta: trace_collapsed - trace_numberop,
        })
    }

    /// Reduced emitter state, the partial trace over all sensors.
    pub fn reduced_emitter_state(&self) -> Array2<C64> {
        let d = self.emitter_dim;
        let b = 1 << self.m;
        let mut out = Array2::<C64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                for s in 0..b {
                    out[[i, j]] += self.steady[[i * b + s, j * b + s]];
                }
            }
        }
        out
    }
}
