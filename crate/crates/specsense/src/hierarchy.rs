// SPDX-License-Identifier: MIT

//! Auxiliary-operator hierarchy for frequency-filtered photon statistics.
//!
//! Each of M detection filters is characterized by a center frequency w_m
//! (rad/ps) and a linewidth G_m (1/ps). Filtered intensity moments follow
//! from auxiliary system operators rho[n] indexed by per-filter occupation
//! pairs n_m = (j_m, j'_m), j in {0, 1}. In the stationary regime every
//! entry solves a shifted linear system driven by entries of lower total
//! weight,
//!
//! ```text
//! [L0 - sum_m ((j_m + j'_m) G_m / 2 + i (j_m - j'_m) w_m)] rho[n]
//!   = i sum_m [ delta_{j_m,1} a_m rho[n - e_m]
//!             - delta_{j'_m,1} rho[n - e'_m] a_m^dag ]
//! ```
//!
//! rooted in the emitter steady state, where L0 is the bare emitter
//! generator and a_m the emission operator filter m watches. The entries
//! are rescaled so that no filter-emitter coupling strength appears; all
//! physical outputs are ratios in which it would cancel anyway.
//!
//! Outputs: the physical spectrum S(w) = (G / 2 pi) tr rho[(1,1)] (for the
//! filtered-intensity notion of a spectrum see Eberly & Wodkiewicz, J.
//! Opt. Soc. Am. 67, 1252 (1977)) and zero-delay intensity correlations of
//! order M as the all-ones trace over the product of single-filter traces.
//!
//! Entries with swapped upper and lower indices are Hermitian adjoints of
//! each other; the solver fills them by adjoint and then re-verifies the
//! filled entry against its own equation, so the symmetry is checked, not
//! assumed.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::liouville::{
    cr, dagger, devectorize, max_abs, trace, vectorize, Superoperator, C64,
};
use crate::timecorr::CorrelationCurve;
use crate::tol;

/// Largest supported filter count: auxiliary storage and solve time grow
/// as 4^M, which stays practical through four filters.
pub const MAX_SENSORS: usize = 4;

/// One detection filter: center frequency, linewidth, and the model
/// emission operator it watches.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    /// Filter center frequency (rad/ps).
    pub omega: f64,
    /// Filter linewidth, equal to the detector decay rate (1/ps).
    pub gamma: f64,
    /// Name of the emission operator in the model's operator table.
    pub emission_op_name: String,
}

impl SensorSpec {
    pub fn new(omega: f64, gamma: f64, emission_op_name: &str) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be finite, got {omega}"),
            });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be positive and finite, got {gamma}"),
            });
        }
        if emission_op_name.is_empty() {
            return Err(Error::InvalidParameter {
                name: "emission_op_name",
                reason: "must not be empty".to_string(),
            });
        }
        Ok(Self {
            omega,
            gamma,
            emission_op_name: emission_op_name.to_string(),
        })
    }
}

/// Occupation index of one auxiliary operator: element m is the pair
/// (j_m, j'_m) for filter m, each component 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<(u8, u8)>);

impl MultiIndex {
    /// All-zero index of the root (steady-state) entry.
    pub fn root(m: usize) -> Self {
        Self(vec![(0, 0); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total occupation weight sum_m (j_m + j'_m).
    pub fn weight(&self) -> u32 {
        self.0.iter().map(|&(j, jp)| (j + jp) as u32).sum()
    }

    /// Index of the Hermitian-adjoint entry: every pair swapped.
    pub fn conjugate(&self) -> Self {
        Self(self.0.iter().map(|&(j, jp)| (jp, j)).collect())
    }

    fn lower_upper(&self, m: usize) -> Option<Self> {
        (self.0[m].0 == 1).then(|| {
            let mut v = self.0.clone();
            v[m].0 = 0;
            Self(v)
        })
    }

    fn lower_lower(&self, m: usize) -> Option<Self> {
        (self.0[m].1 == 1).then(|| {
            let mut v = self.0.clone();
            v[m].1 = 0;
            Self(v)
        })
    }

    /// Complex shift of this entry's linear system.
    fn shift(&self, sensors: &[SensorSpec]) -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for (&(j, jp), s) in self.0.iter().zip(sensors) {
            z += C64::new(
                (j + jp) as f64 * s.gamma / 2.0,
                (j as f64 - jp as f64) * s.omega,
            );
        }
        z
    }

    fn components_valid(&self) -> bool {
        self.0.iter().all(|&(j, jp)| j <= 1 && jp <= 1)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (j, jp)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({j},{jp})")?;
        }
        write!(f, "]")
    }
}

fn decode(code: usize, m: usize) -> MultiIndex {
    MultiIndex(
        (0..m)
            .map(|i| {
                let d = (code >> (2 * i)) & 3;
                ((d >> 1) as u8, (d & 1) as u8)
            })
            .collect(),
    )
}

/// Trace that is real by construction; the imaginary residue policy flags
/// anything beyond rounding noise instead of truncating it.
fn real_trace(mat: &Array2<C64>, context: &'static str) -> Result<f64> {
    let tr = trace(mat.view());
    let bound = (tol::IM_RESIDUE_REL * tr.re.abs()).max(tol::IM_RESIDUE_ABS);
    if tr.im.abs() > bound {
        return Err(Error::ImaginaryResidue {
            context,
            imag: tr.im.abs(),
            bound,
        });
    }
    Ok(tr.re)
}

/// Complete solved set of auxiliary operators for a fixed filter list.
#[derive(Debug, Clone)]
pub struct AuxMatrixSet {
    sensors: Vec<SensorSpec>,
    entries: BTreeMap<MultiIndex, Array2<C64>>,
}

impl AuxMatrixSet {
    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    /// Looks up one auxiliary operator by its occupation index.
    pub fn entry(&self, idx: &MultiIndex) -> Result<&Array2<C64>> {
        if idx.len() != self.sensor_count() {
            return Err(Error::DimensionMismatch {
                context: "AuxMatrixSet::entry",
                expected: self.sensor_count().to_string(),
                got: idx.len().to_string(),
            });
        }
        if !idx.components_valid() {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!("occupation components must be 0 or 1, got {idx}"),
            });
        }
        self.entries.get(idx).ok_or_else(|| Error::InvalidParameter {
            name: "index",
            reason: format!("{idx} missing from solved set"),
        })
    }

    /// The root entry, equal to the emitter steady state.
    pub fn steady_state(&self) -> &Array2<C64> {
        &self.entries[&MultiIndex::root(self.sensor_count())]
    }

    /// Real trace of the single-excitation diagonal entry of filter m:
    /// the rescaled filtered population <n_m>.
    pub fn diagonal_trace(&self, m: usize) -> Result<f64> {
        if m >= self.sensor_count() {
            return Err(Error::InvalidParameter {
                name: "m",
                reason: format!("filter {m} of {}", self.sensor_count()),
            });
        }
        let mut v = vec![(0, 0); self.sensor_count()];
        v[m] = (1, 1);
        real_trace(self.entry(&MultiIndex(v))?, "filtered population")
    }

    /// Iterates entries in deterministic index order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Array2<C64>)> {
        self.entries.iter()
    }

    /// Structural invariants: adjoint symmetry between conjugate index
    /// pairs (Hermiticity of self-conjugate entries included), unit trace
    /// at the root, and nonnegative filtered populations.
    pub fn validate(&self) -> Result<()> {
        for (idx, mat) in &self.entries {
            let partner = self.entry(&idx.conjugate())?;
            let dev = (partner - &dagger(mat.view()))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let scale = max_abs(mat.view()).max(1.0);
            if dev > tol::CONJUGATE_SYMMETRY * scale {
                return Err(Error::NonHermitian {
                    context: "auxiliary conjugate pair",
                    deviation: dev,
                });
            }
        }
        let root_tr = trace(self.steady_state().view());
        if (root_tr - cr(1.0)).norm() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "root trace",
                reason: format!("expected 1, got {root_tr}"),
            });
        }
        for m in 0..self.sensor_count() {
            let n = self.diagonal_trace(m)?;
            if n < -tol::IM_RESIDUE_ABS {
                return Err(Error::InvalidParameter {
                    name: "filtered population",
                    reason: format!("filter {m} population {n:.3e} is negative"),
                });
            }
        }
        Ok(())
    }
}

/// Reusable solver: emitter generator and steady state are computed once,
/// then any number of filter lists can be solved against them.
pub struct HierarchySolver<'m> {
    model: &'m EmitterModel,
    l0: Superoperator,
    rho_ss: Array2<C64>,
}

impl<'m> HierarchySolver<'m> {
    pub fn new(model: &'m EmitterModel) -> Result<Self> {
        let l0 = model.liouvillian()?;
        let rho_ss = l0.steady_state()?;
        Ok(Self { model, l0, rho_ss })
    }

    pub fn liouvillian(&self) -> &Superoperator {
        &self.l0
    }

    pub fn steady_state(&self) -> &Array2<C64> {
        &self.rho_ss
    }

    /// Solves all 4^M auxiliary entries in ascending weight order.
    pub fn solve(&self, sensors: &[SensorSpec]) -> Result<AuxMatrixSet> {
        let m = sensors.len();
        if m == 0 {
            return Err(Error::SensorCount {
                got: 0,
                reason: "at least one filter is required",
            });
        }
        if m > MAX_SENSORS {
            return Err(Error::SensorCount {
                got: m,
                reason: "auxiliary storage grows as 4^M; see MAX_SENSORS",
            });
        }
        let ops: Vec<&Array2<C64>> = sensors
            .iter()
            .map(|s| self.model.emission_op(&s.emission_op_name))
            .collect::<Result<_>>()?;

        let mut entries = BTreeMap::new();
        entries.insert(MultiIndex::root(m), self.rho_ss.clone());
        for weight in 1..=(2 * m as u32) {
            for code in 0..4usize.pow(m as u32) {
                let idx = decode(code, m);
                if idx.weight() != weight || entries.contains_key(&idx) {
                    continue;
                }
                if let Some(partner) = entries.get(&idx.conjugate()) {
                    let filled = dagger(partner.view());
                    self.verify_entry(&idx, &filled, &entries, sensors, &ops)?;
                    entries.insert(idx, filled);
                    continue;
                }
                let rhs = rhs_for(&idx, &entries, &ops);
                let z = idx.shift(sensors);
                let x = self
                    .l0
                    .shifted_solve(z, vectorize(rhs.view()).view())
                    .map_err(|e| match e {
                        Error::ShiftedSolveSingular { residual, .. } => {
                            Error::HierarchyResidual {
                                index: idx.to_string(),
                                residual,
                                bound: tol::SHIFTED_RESIDUAL,
                            }
                        }
                        other => other,
                    })?;
                entries.insert(idx, devectorize(x.view())?);
            }
        }
        Ok(AuxMatrixSet {
            sensors: sensors.to_vec(),
            entries,
        })
    }

    /// Physical spectrum value at one filter setting,
    /// `S(w) = (G / 2 pi) <n>`.
    pub fn spectrum_point(&self, sensor: &SensorSpec) -> Result<f64> {
        let aux = self.solve(std::slice::from_ref(sensor))?;
        Ok(sensor.gamma / (2.0 * std::f64::consts::PI) * aux.diagonal_trace(0)?)
    }

    /// Zero-delay M-filter intensity correlation.
    pub fn gm_zero(&self, sensors: &[SensorSpec]) -> Result<f64> {
        gm_zero_from_aux(&self.solve(sensors)?)
    }

    /// Checks a candidate entry against its own hierarchy equation:
    /// residual of `(L0 - z) e - rhs` at most [`tol::HIERARCHY_RESIDUAL`]
    /// relative to max(1, |rhs|).
    fn verify_entry(
        &self,
        idx: &MultiIndex,
        candidate: &Array2<C64>,
        entries: &BTreeMap<MultiIndex, Array2<C64>>,
        sensors: &[SensorSpec],
        ops: &[&Array2<C64>],
    ) -> Result<()> {
        let rhs = rhs_for(idx, entries, ops);
        let z = idx.shift(sensors);
        let e = vectorize(candidate.view());
        let le = self.l0.apply_vec(e.view())?;
        let rv = vectorize(rhs.view());
        let residual = le
            .iter()
            .zip(e.iter())
            .zip(rv.iter())
            .map(|((l, x), r)| (l - z * x - r).norm())
            .fold(0.0, f64::max);
        let bound = tol::HIERARCHY_RESIDUAL * max_abs(rhs.view()).max(1.0);
        if !(residual <= bound) {
            return Err(Error::HierarchyResidual {
                index: idx.to_string(),
                residual,
                bound,
            });
        }
        Ok(())
    }
}

/// Source term of one hierarchy equation from the lower-weight entries.
fn rhs_for(
    idx: &MultiIndex,
    entries: &BTreeMap<MultiIndex, Array2<C64>>,
    ops: &[&Array2<C64>],
) -> Array2<C64> {
    let d = ops[0].nrows();
    let plus_i = C64::new(0.0, 1.0);
    let mut rhs = Array2::<C64>::zeros((d, d));
    for m in 0..idx.len() {
        if let Some(low) = idx.lower_upper(m) {
            let src = entries
                .get(&low)
                .expect("lower-weight entry present by construction");
            rhs.scaled_add(plus_i, &ops[m].dot(src));
        }
        if let Some(low) = idx.lower_lower(m) {
            let src = entries
                .get(&low)
                .expect("lower-weight entry present by construction");
            rhs.scaled_add(-plus_i, &src.dot(&dagger(ops[m].view())));
        }
    }
    rhs
}

/// Solves the full auxiliary set for one model and filter list.
pub fn solve_hierarchy(model: &EmitterModel, sensors: &[SensorSpec]) -> Result<AuxMatrixSet> {
    HierarchySolver::new(model)?.solve(sensors)
}

/// Physical spectrum over a strictly increasing frequency grid (rad/ps),
/// one independent two-solve chain per grid point.
pub fn power_spectrum(
    model: &EmitterModel,
    grid_radps: &[f64],
    gamma: f64,
    emission_op_name: &str,
) -> Result<CorrelationCurve> {
    let solver = HierarchySolver::new(model)?;
    let mut values = Vec::with_capacity(grid_radps.len());
    for &w in grid_radps {
        let sensor = SensorSpec::new(w, gamma, emission_op_name)?;
        values.push(solver.spectrum_point(&sensor)?);
    }
    CorrelationCurve::new(grid_radps.to_vec(), values)
}

/// Zero-delay M-filter correlation from a solved set: the all-ones trace
/// normalized by the product of filtered populations. Populations below
/// the vanishing-denominator floor are rejected, not divided by.
pub fn gm_zero_from_aux(aux: &AuxMatrixSet) -> Result<f64> {
    let m = aux.sensor_count();
    let ones = MultiIndex(vec![(1, 1); m]);
    let num = real_trace(aux.entry(&ones)?, "coincidence trace")?;
    let dens: Vec<f64> = (0..m)
        .map(|i| aux.diagonal_trace(i))
        .collect::<Result<_>>()?;
    let dmax = dens.iter().cloned().fold(0.0, f64::max);
    let floor = (tol::DENOM_FLOOR_REL * dmax).max(tol::DENOM_FLOOR_ABS);
    for (i, &n) in dens.iter().enumerate() {
        if n <= floor {
            return Err(Error::VanishingDenominator {
                value: n,
                omega: aux.sensors()[i].omega,
                floor,
            });
        }
    }
    Ok(num / dens.iter().product::<f64>())
}

/// Zero-delay M-filter correlation for one model and filter list.
pub fn gm_zero(model: &EmitterModel, sensors: &[SensorSpec]) -> Result<f64> {
    gm_zero_from_aux(&solve_hierarchy(model, sensors)?)
}

/// Zero-delay cross correlation of two filters.
pub fn g2_zero(model: &EmitterModel, s1: &SensorSpec, s2: &SensorSpec) -> Result<f64> {
    gm_zero(model, &[s1.clone(), s2.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::{build_vibronic_dimer, DimerParams, CM1_TO_RAD_PER_PS};
    use approx::assert_abs_diff_eq;
    use approx::assert_relative_eq;

    const R3: f64 = 17455.0;
    const R4: f64 = 18515.0;
    const GAMMA_SENSOR: f64 = 1.0 / 4.8;

    fn sensor(omega_cm1: f64) -> SensorSpec {
        SensorSpec::new(omega_cm1 * CM1_TO_RAD_PER_PS, GAMMA_SENSOR, "a").unwrap()
    }

    fn model() -> EmitterModel {
        build_vibronic_dimer(&DimerParams::default()).unwrap()
    }

    #[test]
    fn multi_index_helpers() {
        let idx = MultiIndex(vec![(1, 0), (0, 1)]);
        assert_eq!(idx.weight(), 2);
        assert_eq!(idx.conjugate(), MultiIndex(vec![(0, 1), (1, 0)]));
        assert_eq!(idx.lower_upper(0), Some(MultiIndex(vec![(0, 0), (0, 1)])));
        assert_eq!(idx.lower_upper(1), None);
        assert_eq!(idx.lower_lower(1), Some(MultiIndex(vec![(1, 0), (0, 0)])));
        assert_eq!(idx.to_string(), "[(1,0),(0,1)]");
        assert_eq!(MultiIndex::root(2).weight(), 0);

        let s = [sensor(R4), sensor(R3)];
        let z = idx.shift(&s);
        assert_abs_diff_eq!(z.re, GAMMA_SENSOR, epsilon = 1e-15);
        assert_abs_diff_eq!(
            z.im,
            (R4 - R3) * CM1_TO_RAD_PER_PS,
            epsilon = 1e-9
        );
    }

    #[test]
    fn root_entry_is_the_steady_state() {
        let m = model();
        let solver = HierarchySolver::new(&m).unwrap();
        let aux = solver.solve(&[sensor(R3)]).unwrap();
        let root = aux.steady_state();
        assert!((trace(root.view()) - cr(1.0)).norm() < 1e-12);
        let dev = (root - solver.steady_state())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn frozen_spectrum_values() {
        let m = model();
        let solver = HierarchySolver::new(&m).unwrap();
        let s3 = solver.spectrum_point(&sensor(R3)).unwrap();
        let s4 = solver.spectrum_point(&sensor(R4)).unwrap();
        assert_relative_eq!(s3, 0.04860179038102983, max_relative = 1e-9);
        assert_relative_eq!(s4, 0.0007426950319416752, max_relative = 1e-9);
        // The strong line is a local maximum on the 5 / cm grid.
        let near: Vec<f64> = [R3 - 5.0, R3, R3 + 5.0]
            .iter()
            .map(|w| solver.spectrum_point(&sensor(*w)).unwrap())
            .collect();
        assert!(near[1] > near[0] && near[1] > near[2]);
        assert!(near.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn power_spectrum_curve_matches_points() {
        let m = model();
        let grid: Vec<f64> = [R3 - 5.0, R3, R3 + 5.0]
            .iter()
            .map(|w| w * CM1_TO_RAD_PER_PS)
            .collect();
        let curve = power_spectrum(&m, &grid, GAMMA_SENSOR, "a").unwrap();
        let solver = HierarchySolver::new(&m).unwrap();
        for (w, v) in grid.iter().zip(curve.values.iter()) {
            let p = solver
                .spectrum_point(&SensorSpec::new(*w, GAMMA_SENSOR, "a").unwrap())
                .unwrap();
            assert_abs_diff_eq!(*v, p, epsilon = 1e-15);
        }
    }

    #[test]
    fn frozen_two_filter_correlation() {
        let m = model();
        let g = g2_zero(&m, &sensor(R4), &sensor(R3)).unwrap();
        assert_relative_eq!(g, 0.13931377146714438, max_relative = 1e-9);

        let aux = solve_hierarchy(&m, &[sensor(R4), sensor(R3)]).unwrap();
        assert_relative_eq!(
            aux.diagonal_trace(0).unwrap(),
            0.02239915445957381,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            aux.diagonal_trace(1).unwrap(),
            1.4657954650786016,
            max_relative = 1e-8
        );
        aux.validate().unwrap();
    }

    #[test]
    fn correlation_is_symmetric_under_filter_swap() {
        let m = model();
        let g12 = g2_zero(&m, &sensor(R4), &sensor(R3)).unwrap();
        let g21 = g2_zero(&m, &sensor(R3), &sensor(R4)).unwrap();
        assert_relative_eq!(g12, g21, max_relative = 1e-9);
    }

    #[test]
    fn single_filter_correlation_is_unity() {
        let m = model();
        let g = gm_zero(&m, &[sensor(R3)]).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn two_filter_paths_agree() {
        let m = model();
        let solver = HierarchySolver::new(&m).unwrap();
        let sensors = [sensor(R4), sensor(R3)];
        let a = solver.gm_zero(&sensors).unwrap();
        let b = g2_zero(&m, &sensors[0], &sensors[1]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn frozen_three_filter_correlation() {
        let m = model();
        let g3 = gm_zero(&m, &[sensor(R4), sensor(R3), sensor(R3)]).unwrap();
        assert_relative_eq!(g3, 0.003131492751456051, max_relative = 1e-8);
    }

    #[test]
    fn populations_are_consistent_across_filter_counts() {
        let m = model();
        let solver = HierarchySolver::new(&m).unwrap();
        let aux2 = solver.solve(&[sensor(R4), sensor(R3)]).unwrap();
        let aux1 = solver.solve(&[sensor(R4)]).unwrap();
        assert_relative_eq!(
            aux2.diagonal_trace(0).unwrap(),
            aux1.diagonal_trace(0).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn cross_entry_satisfies_its_equation() {
        // Direct residual check of an adjoint-coupled weight-2 entry.
        let m = model();
        let solver = HierarchySolver::new(&m).unwrap();
        let sensors = [sensor(R4), sensor(R3)];
        let aux = solver.solve(&sensors).unwrap();
        let idx = MultiIndex(vec![(1, 0), (0, 1)]);
        let e = aux.entry(&idx).unwrap();
        let a = m.emission_op("a").unwrap();

        let z = idx.shift(&sensors);
        let le = solver
            .liouvillian()
            .apply(e.view())
            .unwrap();
        let lhs = &le - &e.mapv(|v| v * z);
        let low_u = aux.entry(&MultiIndex(vec![(0, 0), (0, 1)])).unwrap();
        let low_l = aux.entry(&MultiIndex(vec![(1, 0), (0, 0)])).unwrap();
        let mut rhs = a.dot(low_u).mapv(|v| v * C64::new(0.0, 1.0));
        rhs.scaled_add(C64::new(0.0, -1.0), &low_l.dot(&dagger(a.view())));
        let dev = (&lhs - &rhs)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < tol::HIERARCHY_RESIDUAL, "residual {dev:.3e}");
    }

    #[test]
    fn far_detuned_filter_is_rejected_as_vanishing() {
        let m = model();
        let far = SensorSpec::new(
            R3 * CM1_TO_RAD_PER_PS + 1e9,
            GAMMA_SENSOR,
            "a",
        )
        .unwrap();
        match g2_zero(&m, &sensor(R3), &far) {
            Err(Error::VanishingDenominator { omega, .. }) => {
                assert_abs_diff_eq!(omega, far.omega, epsilon = 1e-6);
            }
            other => panic!("expected vanishing denominator, got {other:?}"),
        }
    }

    #[test]
    fn validate_detects_tampering() {
        let m = model();
        let mut aux = solve_hierarchy(&m, &[sensor(R3)]).unwrap();
        aux.validate().unwrap();
        let idx = MultiIndex(vec![(1, 0)]);
        if let Some(e) = aux.entries.get_mut(&idx) {
            e[[0, 0]] += cr(0.5);
        }
        assert!(matches!(
            aux.validate(),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn sensor_and_index_validation() {
        assert!(SensorSpec::new(f64::NAN, 1.0, "a").is_err());
        assert!(SensorSpec::new(1.0, 0.0, "a").is_err());
        assert!(SensorSpec::new(1.0, -1.0, "a").is_err());
        assert!(SensorSpec::new(1.0, 1.0, "").is_err());

        let m = model();
        assert!(matches!(
            solve_hierarchy(&m, &[]),
            Err(Error::SensorCount { got: 0, .. })
        ));
        let many = vec![sensor(R3); MAX_SENSORS + 1];
        assert!(matches!(
            solve_hierarchy(&m, &many),
            Err(Error::SensorCount { .. })
        ));
        let bad_op = SensorSpec::new(R3 * CM1_TO_RAD_PER_PS, 1.0, "nope").unwrap();
        assert!(matches!(
            solve_hierarchy(&m, &[bad_op]),
            Err(Error::UnknownEmissionOp { .. })
        ));

        let aux = solve_hierarchy(&m, &[sensor(R3)]).unwrap();
        assert!(aux.entry(&MultiIndex(vec![(1, 0), (0, 1)])).is_err());
        assert!(aux.entry(&MultiIndex(vec![(2, 0)])).is_err());
        assert!(aux.diagonal_trace(1).is_err());
    }
}
