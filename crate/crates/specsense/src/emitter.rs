// SPDX-License-Identifier: MIT

//! Emitter models: the generic container, file I/O, and the built-in
//! vibronic dimer.
//!
//! An [`EmitterModel`] bundles a Hamiltonian (rad/ps), Lindblad channels
//! (rates in 1/ps), and named emission operators that frequency filters
//! couple to. Models are immutable after construction and safe to share
//! across threads.
//!
//! The built-in model is a two-chromophore dimer with onsite energies
//! alpha_1 > alpha_2, dipole coupling V, and one effective vibrational mode
//! coupled to the relative displacement. In the electronic eigenbasis
//! {|G>, |X1>, |X2>} (X1 the upper exciton) the Hamiltonian is a
//! generalized quantum Rabi model:
//!
//! ```text
//! H = E (P1 + P2) + (dE/2) sz + w_vib n
//!     + (g/2) (cos(2 theta) sz - sin(2 theta) sx) (b + b^dag)
//! ```
//!
//! with dE = sqrt(d_alpha^2 + 4 V^2), theta = arctan(2|V|/d_alpha)/2, and
//! sz, sx Pauli operators on the exciton doublet. The displacement
//! coupling uses the position-quadrature convention, so the quoted g
//! equals sqrt(S) * w_vib for Huang-Rhys factor S.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::liouville::{build_liouvillian, cr, dagger, kron, max_abs, C64};
use crate::liouville::{LindbladChannel, Superoperator};

/// Wavenumber to angular frequency: multiply cm^-1 by 2 pi c with
/// c = 0.0299792458 cm/ps to get rad/ps.
pub const CM1_TO_RAD_PER_PS: f64 = 2.0 * std::f64::consts::PI * 0.0299792458;

/// Bose-Einstein occupation eta = 1 / (e^{omega / kbt} - 1); unit-agnostic
/// as only the ratio enters.
pub fn thermal_occupation(omega: f64, kbt: f64) -> f64 {
    1.0 / ((omega / kbt).exp() - 1.0)
}

/// Open quantum emitter: Hamiltonian, decay channels, and the emission
/// operators that detection filters can couple to.
#[derive(Debug, Clone)]
pub struct EmitterModel {
    /// Hilbert-space dimension.
    pub dim: usize,
    /// One label per basis state, for inspection output.
    pub basis_labels: Vec<String>,
    /// Hamiltonian in rad/ps.
    pub hamiltonian: Array2<C64>,
    /// Lindblad channels; rates in 1/ps.
    pub channels: Vec<LindbladChannel>,
    /// Named emission operators, insertion-ordered.
    pub emission_ops: Vec<(String, Array2<C64>)>,
}

impl EmitterModel {
    /// Validates dimensions, Hermiticity of the Hamiltonian, and rate
    /// signs. Called by every constructor path.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.hamiltonian.nrows() != d || self.hamiltonian.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "EmitterModel hamiltonian",
                expected: format!("{d}x{d}"),
                got: format!(
                    "{}x{}",
                    self.hamiltonian.nrows(),
                    self.hamiltonian.ncols()
                ),
            });
        }
        if self.basis_labels.len() != d {
            return Err(Error::DimensionMismatch {
                context: "EmitterModel basis_labels",
                expected: d.to_string(),
                got: self.basis_labels.len().to_string(),
            });
        }
        let scale = max_abs(self.hamiltonian.view()).max(1.0);
        let dev = (&self.hamiltonian - &dagger(self.hamiltonian.view()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-12 * scale {
            return Err(Error::NonHermitian {
                context: "model hamiltonian",
                deviation: dev,
            });
        }
        for ch in &self.channels {
            if ch.jump.nrows() != d || ch.jump.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "EmitterModel channel",
                    expected: format!("{d}x{d}"),
                    got: format!("{}x{}", ch.jump.nrows(), ch.jump.ncols()),
                });
            }
            if !(ch.rate >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "channel rate",
                    reason: format!("must be nonnegative, got {}", ch.rate),
                });
            }
        }
        for (name, op) in &self.emission_ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "EmitterModel emission op",
                    expected: format!("{d}x{d}"),
                    got: format!("{name}: {}x{}", op.nrows(), op.ncols()),
                });
            }
        }
        Ok(())
    }

    /// Assembles the full Lindblad generator of the model.
    pub fn liouvillian(&self) -> Result<Superoperator> {
        build_liouvillian(self.hamiltonian.view(), &self.channels)
    }

    /// Looks up an emission operator by name.
    pub fn emission_op(&self, name: &str) -> Result<&Array2<C64>> {
        self.emission_ops
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, op)| op)
            .ok_or_else(|| Error::UnknownEmissionOp {
                name: name.to_string(),
            })
    }

    /// Serializes to the model file format with Hamiltonian entries in
    /// rad/ps. Output is deterministic for a given model.
    pub fn to_toml_string(&self) -> Result<String> {
        let file = ModelFile {
            dim: self.dim,
            units: "rad/ps".to_string(),
            basis_labels: self.basis_labels.clone(),
            hamiltonian: matrix_to_rows(self.hamiltonian.view()),
            channels: self
                .channels
                .iter()
                .map(|ch| ChannelFile {
                    rate: ch.rate,
                    matrix: matrix_to_rows(ch.jump.view()),
                })
                .collect(),
            emission_ops: self
                .emission_ops
                .iter()
                .map(|(n, op)| (n.clone(), matrix_to_rows(op.view())))
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::ModelFile(format!("serialize: {e}")))
    }

    /// Parses the model file format. Hamiltonian entries declared in
    /// "cm-1" are converted to rad/ps on load; channel rates are always
    /// 1/ps and jump/emission matrices are dimensionless.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::ModelFile(format!("parse: {e}")))?;
        let scale = match file.units.as_str() {
            "rad/ps" => 1.0,
            "cm-1" => CM1_TO_RAD_PER_PS,
            other => {
                return Err(Error::ModelFile(format!(
                    "units must be \"rad/ps\" or \"cm-1\", got {other:?}"
                )))
            }
        };
        let d = file.dim;
        let mut hamiltonian = rows_to_matrix(&file.hamiltonian, d, "hamiltonian")?;
        if scale != 1.0 {
            hamiltonian.mapv_inplace(|z| z * cr(scale));
        }
        let mut channels = Vec::with_capacity(file.channels.len());
        for (i, ch) in file.channels.iter().enumerate() {
            channels.push(LindbladChannel::new(
                ch.rate,
                rows_to_matrix(&ch.matrix, d, "channel")
                    .map_err(|_| Error::ModelFile(format!("channel {i} is not {d}x{d}")))?,
            ));
        }
        let mut emission_ops = Vec::with_capacity(file.emission_ops.len());
        for (name, rows) in &file.emission_ops {
            emission_ops.push((
                name.clone(),
                rows_to_matrix(rows, d, "emission op")
                    .map_err(|_| Error::ModelFile(format!("emission op {name:?} is not {d}x{d}")))?,
            ));
        }
        let model = EmitterModel {
            dim: d,
            basis_labels: file.basis_labels,
            hamiltonian,
            channels,
            emission_ops,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_toml_string()?;
        std::fs::write(path, text)
            .map_err(|e| Error::ModelFile(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFile(format!("read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Serde mirror of the model file format: complex entries as [re, im]
/// pairs, matrices row-major.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    units: String,
    basis_labels: Vec<String>,
    hamiltonian: Vec<Vec<[f64; 2]>>,
    channels: Vec<ChannelFile>,
    emission_ops: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    rate: f64,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn matrix_to_rows(m: ArrayView2<C64>) -> Vec<Vec<[f64; 2]>> {
    m.outer_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>], d: usize, what: &str) -> Result<Array2<C64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            context: "model file matrix",
            expected: format!("{d}x{d}"),
            got: format!("{what}: {} rows", rows.len()),
        });
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Parameters of the built-in vibronic dimer. Energies in cm^-1, rates in
/// 1/ps. Only the difference alpha1 - alpha2 enters the Hamiltonian
/// besides the average exciton energy `e`, which is an independent input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimerParams {
    /// Onsite energy of chromophore 1 (cm^-1).
    pub alpha1: f64,
    /// Onsite energy of chromophore 2 (cm^-1); alpha1 - alpha2 must be
    /// positive.
    pub alpha2: f64,
    /// Dipole-dipole coupling V (cm^-1).
    pub v: f64,
    /// Vibrational mode frequency (cm^-1).
    pub omega_vib: f64,
    /// Exciton-vibration coupling g = sqrt(S) * omega_vib (cm^-1).
    pub g: f64,
    /// Average exciton energy E (cm^-1).
    pub e: f64,
    /// Pure-dephasing rate per site (1/ps).
    pub gamma_pd: f64,
    /// Radiative decay rate per vibronic transition (1/ps).
    pub gamma_rad: f64,
    /// Incoherent pump rate into the upper exciton (1/ps).
    pub pump_x1: f64,
    /// Thermal relaxation rate of the vibrational mode (1/ps).
    pub gamma_th: f64,
    /// Thermal energy K_B T (cm^-1).
    pub temperature_energy: f64,
    /// Highest retained vibrational quantum L.
    pub l_max: usize,
}

impl Default for DimerParams {
    /// Bio-inspired defaults: V = 92, d_alpha = 1042, E = 18000,
    /// w_vib = 1111, g = 267.1, K_B T = 200 (all cm^-1); dephasing 1/ps,
    /// radiative (500 ps)^-1, pump (600 ps)^-1, thermal (4.8 ps)^-1; L = 5.
    fn default() -> Self {
        DimerParams {
            alpha1: 18521.0,
            alpha2: 17479.0,
            v: 92.0,
            omega_vib: 1111.0,
            g: 267.1,
            e: 18000.0,
            gamma_pd: 1.0,
            gamma_rad: 1.0 / 500.0,
            pump_x1: 1.0 / 600.0,
            gamma_th: 1.0 / 4.8,
            temperature_energy: 200.0,
            l_max: 5,
        }
    }
}

impl DimerParams {
    /// Onsite energy difference d_alpha = alpha1 - alpha2 (cm^-1).
    pub fn delta_alpha(&self) -> f64 {
        self.alpha1 - self.alpha2
    }

    /// Exciton splitting dE = sqrt(d_alpha^2 + 4 V^2) (cm^-1).
    pub fn exciton_splitting(&self) -> f64 {
        let da = self.delta_alpha();
        (da * da + 4.0 * self.v * self.v).sqrt()
    }

    /// Mixing angle theta = arctan(2|V|/d_alpha)/2, in (0, pi/4) for
    /// V != 0.
    pub fn mixing_angle(&self) -> f64 {
        0.5 * (2.0 * self.v.abs() / self.delta_alpha()).atan()
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_alpha() > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha1 - alpha2",
                reason: format!("must be positive, got {}", self.delta_alpha()),
            });
        }
        for (name, r) in [
            ("gamma_pd", self.gamma_pd),
            ("gamma_rad", self.gamma_rad),
            ("pump_x1", self.pump_x1),
            ("gamma_th", self.gamma_th),
        ] {
            if !(r >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    reason: format!("{name} must be nonnegative, got {r}"),
                });
            }
        }
        if !(self.temperature_energy > 0.0) {
            return Err(Error::InvalidParameter {
                name: "temperature_energy",
                reason: format!("must be positive, got {}", self.temperature_energy),
            });
        }
        if !(self.omega_vib > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega_vib",
                reason: format!("must be positive, got {}", self.omega_vib),
            });
        }
        Ok(())
    }
}

/// Builds the vibronic dimer model on the basis
/// {|G>, |X1>, |X2>} x {|0> .. |L>}, electronic index major.
///
/// Channels, in order: two pure-dephasing projectors on the site states
/// (theta-rotated into the exciton basis), thermal relaxation and
/// excitation of the vibrational mode at rates Gamma_th (eta + 1) and
/// Gamma_th eta, radiative decay |G,l><F_v| for every excited eigenstate v
/// and every ground vibrational level l at the uniform rate gamma_rad, and
/// the incoherent pump |X1><G| (x) identity. The emission operator "a" is
/// (|G><X1| + |G><X2|) (x) identity.
pub fn build_vibronic_dimer(p: &DimerParams) -> Result<EmitterModel> {
    p.validate()?;
    let nv = p.l_max + 1;
    let dim = 3 * nv;
    let conv = CM1_TO_RAD_PER_PS;

    // Vibrational mode operators in the truncated level basis.
    let mut b = Array2::<C64>::zeros((nv, nv));
    for l in 1..nv {
        b[[l - 1, l]] = cr((l as f64).sqrt());
    }
    let n_vib = Array2::from_shape_fn((nv, nv), |(i, j)| {
        if i == j {
            cr(i as f64)
        } else {
            cr(0.0)
        }
    });
    let eye_v = Array2::<C64>::eye(nv);
    let x_vib = &b + &dagger(b.view());

    // Electronic operators in the exciton basis {G, X1, X2}.
    let mut m_exc = Array2::<C64>::zeros((3, 3));
    m_exc[[1, 1]] = cr(1.0);
    m_exc[[2, 2]] = cr(1.0);
    let mut sz = Array2::<C64>::zeros((3, 3));
    sz[[1, 1]] = cr(1.0);
    sz[[2, 2]] = cr(-1.0);
    let mut sx = Array2::<C64>::zeros((3, 3));
    sx[[1, 2]] = cr(1.0);
    sx[[2, 1]] = cr(1.0);

    let de = p.exciton_splitting();
    let theta = p.mixing_angle();
    let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());

    let mut h = kron(&m_exc, &eye_v);
    h.mapv_inplace(|z| z * cr(p.e));
    h = h + kron(&sz, &eye_v).mapv(|z| z * cr(de / 2.0));
    h = h + kron(&Array2::<C64>::eye(3), &n_vib).mapv(|z| z * cr(p.omega_vib));
    let coupling_el = sz.mapv(|z| z * cr(c2)) - sx.mapv(|z| z * cr(s2));
    h = h + kron(&coupling_el, &x_vib).mapv(|z| z * cr(p.g / 2.0));
    h.mapv_inplace(|z| z * cr(conv));

    let mut channels = Vec::new();

    // Site projectors |k><k| rotated into the exciton basis. Consistent
    // with the coupling sign above: |1> = cos(theta)|X1> - sin(theta)|X2>,
    // |2> = sin(theta)|X1> + cos(theta)|X2>.
    let (ct, st) = (theta.cos(), theta.sin());
    for site in [0, 1] {
        let mut a_site = Array2::<C64>::zeros((3, 3));
        let (u, w) = if site == 0 { (ct, -st) } else { (st, ct) };
        a_site[[1, 1]] = cr(u * u);
        a_site[[1, 2]] = cr(u * w);
        a_site[[2, 1]] = cr(u * w);
        a_site[[2, 2]] = cr(w * w);
        channels.push(LindbladChannel::new(
            p.gamma_pd,
            kron(&a_site, &eye_v),
        ));
    }

    let eta = thermal_occupation(p.omega_vib, p.temperature_energy);
    let eye3 = Array2::<C64>::eye(3);
    let d_full = kron(&eye3, &b);
    channels.push(LindbladChannel::new(p.gamma_th * (eta + 1.0), d_full.clone()));
    channels.push(LindbladChannel::new(p.gamma_th * eta, dagger(d_full.view())));

    // Radiative decay from every excited vibronic eigenstate to every
    // ground vibrational level, uniform rate.
    let excited = excited_eigensystem_of(h.view(), nv)?;
    for (_, fv) in &excited {
        for l in 0..nv {
            let mut sigma = Array2::<C64>::zeros((dim, dim));
            for j in 0..dim {
                sigma[[l, j]] = fv[j].conj();
            }
            channels.push(LindbladChannel::new(p.gamma_rad, sigma));
        }
    }

    // Incoherent pump of the upper exciton.
    let mut raise_x1 = Array2::<C64>::zeros((3, 3));
    raise_x1[[1, 0]] = cr(1.0);
    channels.push(LindbladChannel::new(p.pump_x1, kron(&raise_x1, &eye_v)));

    // Emission operator a = (sigma_X1 + sigma_X2) (x) identity.
    let mut lower_sum = Array2::<C64>::zeros((3, 3));
    lower_sum[[0, 1]] = cr(1.0);
    lower_sum[[0, 2]] = cr(1.0);
    let a_op = kron(&lower_sum, &eye_v);

    let mut basis_labels = Vec::with_capacity(dim);
    for e in ["G", "X1", "X2"] {
        for l in 0..nv {
            basis_labels.push(format!("{e}:{l}"));
        }
    }

    let model = EmitterModel {
        dim,
        basis_labels,
        hamiltonian: h,
        channels,
        emission_ops: vec![("a".to_string(), a_op)],
    };
    model.validate()?;
    Ok(model)
}

/// Eigenpairs of the Hamiltonian restricted to the excited electronic
/// manifold, sorted ascending by energy (rad/ps). Eigenvectors are
/// embedded in the full Hilbert space (zero on the ground manifold).
///
/// Requires the dimer block structure: dimension 3 nv with the first nv
/// states spanning the ground manifold, decoupled from the rest.
pub fn excited_eigensystem(model: &EmitterModel) -> Result<Vec<(f64, Array1<C64>)>> {
    if model.dim % 3 != 0 {
        return Err(Error::InvalidParameter {
            name: "model.dim",
            reason: format!("expected 3 * nv for a dimer model, got {}", model.dim),
        });
    }
    excited_eigensystem_of(model.hamiltonian.view(), model.dim / 3)
}

fn excited_eigensystem_of(h: ArrayView2<C64>, nv: usize) -> Result<Vec<(f64, Array1<C64>)>> {
    let dim = 3 * nv;
    let scale = max_abs(h).max(1.0);
    // The ground manifold must be decoupled for the restriction to be
    // meaningful.
    let mut coupling = 0.0f64;
    for i in 0..nv {
        for j in nv..dim {
            coupling = coupling.max(h[[i, j]].norm());
        }
    }
    if coupling > 1e-12 * scale {
        return Err(Error::InvalidParameter {
            name: "hamiltonian",
            reason: format!(
                "ground-excited coupling {coupling:.3e} breaks the dimer block structure"
            ),
        });
    }
    let nexc = 2 * nv;
    let block = Array2::from_shape_fn((nexc, nexc), |(i, j)| h[[nv + i, nv + j]]);
    let (vals, vecs) = block.eigh(UPLO::Lower)?;
    let mut order: Vec<usize> = (0..nexc).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    Ok(order
        .into_iter()
        .map(|k| {
            let mut full = Array1::<C64>::zeros(dim);
            for i in 0..nexc {
                full[nv + i] = vecs[[i, k]];
            }
            (vals[k], full)
        })
        .collect())
}
