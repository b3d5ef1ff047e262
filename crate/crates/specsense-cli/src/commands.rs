// SPDX-License-Identifier: MIT
//! Implementations of the data commands.
//!
//! Frequencies and probe couplings cross the command line in cm^-1 and are
//! converted to rad/ps once at ingestion; rates (detector linewidths,
//! channel rates) are plain 1/ps throughout. Sweeps parallelize only over
//! independent grid points and assemble results in grid order, so the
//! numbers are independent of the thread count.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::{json, Value};
use specsense::{
    build_joint, G2TauEvaluator, HierarchySolver, SensorSpec, CM1_TO_RAD_PER_PS,
};

use crate::model_src::ModelSource;
use crate::output::{write_outputs, CsvTable};
use crate::{CliError, CommonArgs};

fn sensor(omega_cm1: f64, gamma: f64, op: &str) -> Result<SensorSpec, CliError> {
    SensorSpec::new(omega_cm1 * CM1_TO_RAD_PER_PS, gamma, op).map_err(CliError::from)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".to_string()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Compute(format!("thread pool: {e}")))
}

/// Least-squares slope of ln(y) against ln(x).
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

fn warnings_json(warnings: &BTreeSet<String>) -> Value {
    json!(warnings.iter().collect::<Vec<_>>())
}

/// Filtered power spectrum over a frequency grid, optionally with the
/// explicit-detector value at one probe coupling alongside.
pub fn cmd_spectrum(
    common: &CommonArgs,
    source: &ModelSource,
    grid_text: &str,
    grid_cm1: &[f64],
    eps: Option<&(String, f64)>,
) -> Result<(), CliError> {
    let model = &source.model;
    let solver = HierarchySolver::new(model)?;
    let pool = pool(common.threads)?;
    let gamma = common.gamma_sensor;
    let op = common.emission_op.as_str();
    let points: Vec<(f64, Option<f64>, Option<String>)> = pool.install(|| {
        grid_cm1
            .par_iter()
            .map(|&w| -> Result<_, CliError> {
                let spec = sensor(w, gamma, op)?;
                let s = solver.spectrum_point(&spec)?;
                match eps {
                    None => Ok((s, None, None)),
                    Some((_, eps_cm1)) => {
                        let joint =
                            build_joint(model, &[spec], eps_cm1 * CM1_TO_RAD_PER_PS)?;
                        let s_o = joint.oracle_spectrum()?;
                        let warn = joint.validity_warning().map(str::to_string);
                        Ok((s, Some(s_o), warn))
                    }
                }
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut headers = vec!["omega_cm1".to_string(), "S".to_string()];
    if eps.is_some() {
        headers.push("S_oracle".to_string());
    }
    let mut table = CsvTable::new(headers);
    let mut warnings = BTreeSet::new();
    for (&w, (s, s_o, warn)) in grid_cm1.iter().zip(&points) {
        let mut row = vec![w, *s];
        if let Some(v) = s_o {
            row.push(*v);
        }
        table.push(row);
        if let Some(msg) = warn {
            warnings.insert(msg.clone());
        }
    }
    write_outputs(
        &common.out,
        &table,
        "spectrum",
        source,
        json!({
            "grid": grid_text,
            "gamma_sensor": gamma,
            "emission_op": op,
            "oracle_eps_cm1": eps.map(|(_, v)| *v),
            "threads": common.threads,
        }),
        json!({ "warnings": warnings_json(&warnings) }),
    )
}

/// Zero-delay cross correlation with the first filter scanned and the
/// second fixed; optional explicit-detector columns per probe coupling.
pub fn cmd_g2map(
    common: &CommonArgs,
    source: &ModelSource,
    grid_text: &str,
    grid_cm1: &[f64],
    omega2_cm1: f64,
    eps_list: &[(String, f64)],
) -> Result<(), CliError> {
    let model = &source.model;
    let solver = HierarchySolver::new(model)?;
    let pool = pool(common.threads)?;
    let gamma = common.gamma_sensor;
    let op = common.emission_op.as_str();
    let points: Vec<(f64, Vec<f64>, Vec<String>)> = pool.install(|| {
        grid_cm1
            .par_iter()
            .map(|&w1| -> Result<_, CliError> {
                let s1 = sensor(w1, gamma, op)?;
                let s2 = sensor(omega2_cm1, gamma, op)?;
                let g = solver.gm_zero(&[s1.clone(), s2.clone()])?;
                let mut oracle = Vec::with_capacity(eps_list.len());
                let mut warns = Vec::new();
                for (_, eps_cm1) in eps_list {
                    let joint = build_joint(
                        model,
                        &[s1.clone(), s2.clone()],
                        eps_cm1 * CM1_TO_RAD_PER_PS,
                    )?;
                    oracle.push(joint.oracle_gm_zero()?);
                    if let Some(msg) = joint.validity_warning() {
                        warns.push(msg.to_string());
                    }
                }
                Ok((g, oracle, warns))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut headers = vec![
        "omega1_cm1".to_string(),
        "omega2_cm1".to_string(),
        "g2".to_string(),
    ];
    for (tok, _) in eps_list {
        headers.push(format!("g2_oracle_{tok}"));
    }
    let mut table = CsvTable::new(headers);
    let mut warnings = BTreeSet::new();
    for (&w1, (g, oracle, warns)) in grid_cm1.iter().zip(&points) {
        let mut row = vec![w1, omega2_cm1, *g];
        row.extend_from_slice(oracle);
        table.push(row);
        warnings.extend(warns.iter().cloned());
    }
    write_outputs(
        &common.out,
        &table,
        "g2map",
        source,
        json!({
            "grid": grid_text,
            "omega2_cm1": omega2_cm1,
            "gamma_sensor": gamma,
            "emission_op": op,
            "oracle_eps_cm1": eps_list.iter().map(|(_, v)| *v).collect::<Vec<_>>(),
            "threads": common.threads,
        }),
        json!({ "warnings": warnings_json(&warnings) }),
    )
}

/// Delay-resolved two-filter correlation, optionally with normalized
/// expansion components and an explicit-detector comparison column.
#[allow(clippy::too_many_arguments)]
pub fn cmd_g2tau(
    common: &CommonArgs,
    source: &ModelSource,
    omega1_cm1: f64,
    omega2_cm1: f64,
    tau_text: &str,
    taus: &[f64],
    components: bool,
    eps: Option<&(String, f64)>,
) -> Result<(), CliError> {
    let model = &source.model;
    let gamma = common.gamma_sensor;
    let op = common.emission_op.as_str();
    let s1 = sensor(omega1_cm1, gamma, op)?;
    let s2 = sensor(omega2_cm1, gamma, op)?;
    let eval = G2TauEvaluator::new(model, &s1, &s2)?;
    let nu = eval.nu();
    let pool = pool(common.threads)?;
    let rows: Vec<(f64, [f64; 3])> = pool.install(|| {
        taus.par_iter()
            .map(|&tau| {
                let c = eval.components(tau);
                (nu * (c[0] + c[1] + c[2]), [nu * c[0], nu * c[1], nu * c[2]])
            })
            .collect()
    });
    let mut warnings = BTreeSet::new();
    let mut oracle_curve = None;
    let mut max_rel: Option<f64> = None;
    if let Some((_, eps_cm1)) = eps {
        let joint = build_joint(model, &[s1, s2], eps_cm1 * CM1_TO_RAD_PER_PS)?;
        if let Some(msg) = joint.validity_warning() {
            warnings.insert(msg.to_string());
        }
        let curve = joint.oracle_g2_tau(taus)?;
        let dev = rows
            .iter()
            .zip(&curve.values)
            .map(|((g, _), o)| (g - o).abs() / o.abs())
            .fold(0.0f64, f64::max);
        max_rel = Some(dev);
        oracle_curve = Some(curve);
    }
    let mut headers = vec!["tau_ps".to_string(), "g2".to_string()];
    if components {
        headers.extend(["I0".to_string(), "I1".to_string(), "I2".to_string()]);
    }
    if eps.is_some() {
        headers.push("g2_oracle".to_string());
    }
    let mut table = CsvTable::new(headers);
    for (k, &tau) in taus.iter().enumerate() {
        let (g, c) = rows[k];
        let mut row = vec![tau, g];
        if components {
            row.extend_from_slice(&c);
        }
        if let Some(curve) = &oracle_curve {
            row.push(curve.values[k]);
        }
        table.push(row);
    }
    write_outputs(
        &common.out,
        &table,
        "g2tau",
        source,
        json!({
            "omega1_cm1": omega1_cm1,
            "omega2_cm1": omega2_cm1,
            "tau": tau_text,
            "gamma_sensor": gamma,
            "emission_op": op,
            "components": components,
            "oracle_eps_cm1": eps.map(|(_, v)| *v),
            "threads": common.threads,
        }),
        json!({
            "max_rel_deviation": max_rel,
            "warnings": warnings_json(&warnings),
        }),
    )
}

/// Zero-delay M-filter coincidence at fixed filter positions.
pub fn cmd_gm(
    common: &CommonArgs,
    source: &ModelSource,
    omegas_cm1: &[f64],
    eps: Option<&(String, f64)>,
) -> Result<(), CliError> {
    let m = omegas_cm1.len();
    if !(2..=3).contains(&m) {
        return Err(CliError::Usage(format!(
            "gM takes two or three --omega values, got {m}"
        )));
    }
    let model = &source.model;
    let gamma = common.gamma_sensor;
    let op = common.emission_op.as_str();
    let sensors: Vec<SensorSpec> = omegas_cm1
        .iter()
        .map(|&w| sensor(w, gamma, op))
        .collect::<Result<_, _>>()?;
    let solver = HierarchySolver::new(model)?;
    let gm = solver.gm_zero(&sensors)?;
    let mut warnings = BTreeSet::new();
    let mut gm_oracle = None;
    if let Some((_, eps_cm1)) = eps {
        let joint = build_joint(model, &sensors, eps_cm1 * CM1_TO_RAD_PER_PS)?;
        if let Some(msg) = joint.validity_warning() {
            warnings.insert(msg.to_string());
        }
        gm_oracle = Some(joint.oracle_gm_zero()?);
    }
    let mut headers: Vec<String> = (1..=m).map(|k| format!("omega{k}_cm1")).collect();
    headers.push(format!("g{m}"));
    if eps.is_some() {
        headers.push(format!("g{m}_oracle"));
    }
    let mut table = CsvTable::new(headers);
    let mut row = omegas_cm1.to_vec();
    row.push(gm);
    if let Some(v) = gm_oracle {
        row.push(v);
    }
    table.push(row);
    write_outputs(
        &common.out,
        &table,
        "gM",
        source,
        json!({
            "omegas_cm1": omegas_cm1,
            "gamma_sensor": gamma,
            "emission_op": op,
            "oracle_eps_cm1": eps.map(|(_, v)| *v),
            "threads": common.threads,
        }),
        json!({ "warnings": warnings_json(&warnings) }),
    )
}

/// Probe-coupling sweep comparing the explicit-detector route against the
/// detector-free one, with log-log deviation slopes in the sidecar.
pub fn cmd_convergence(
    common: &CommonArgs,
    source: &ModelSource,
    omega1_cm1: f64,
    omega2_cm1: f64,
    eps_list: &[(String, f64)],
) -> Result<(), CliError> {
    let model = &source.model;
    let gamma = common.gamma_sensor;
    let op = common.emission_op.as_str();
    let s1 = sensor(omega1_cm1, gamma, op)?;
    let s2 = sensor(omega2_cm1, gamma, op)?;
    let solver = HierarchySolver::new(model)?;
    let s_h = solver.spectrum_point(&s1)?;
    let g2_h = solver.gm_zero(&[s1.clone(), s2.clone()])?;
    let mut table = CsvTable::new(
        [
            "eps_cm1",
            "S_oracle",
            "g2_oracle",
            "S_hierarchy",
            "g2_hierarchy",
            "delta_S",
            "delta_g2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let mut warnings = BTreeSet::new();
    let mut eps_vals = Vec::new();
    let mut s_deltas = Vec::new();
    let mut g_deltas = Vec::new();
    for (_, eps_cm1) in eps_list {
        let eps_radps = eps_cm1 * CM1_TO_RAD_PER_PS;
        let joint1 = build_joint(model, &[s1.clone()], eps_radps)?;
        let s_o = joint1.oracle_spectrum()?;
        if let Some(msg) = joint1.validity_warning() {
            warnings.insert(format!("eps={eps_cm1}: {msg}"));
        }
        drop(joint1);
        let joint2 = build_joint(model, &[s1.clone(), s2.clone()], eps_radps)?;
        let g_o = joint2.oracle_gm_zero()?;
        if let Some(msg) = joint2.validity_warning() {
            warnings.insert(format!("eps={eps_cm1}: {msg}"));
        }
        let ds = (s_o - s_h).abs();
        let dg = (g_o - g2_h).abs();
        table.push(vec![*eps_cm1, s_o, g_o, s_h, g2_h, ds, dg]);
        eps_vals.push(*eps_cm1);
        s_deltas.push(ds);
        g_deltas.push(dg);
    }
    let slopes = if eps_list.len() >= 2 {
        json!({
            "spectrum": loglog_slope(&eps_vals, &s_deltas),
            "g2": loglog_slope(&eps_vals, &g_deltas),
        })
    } else {
        Value::Null
    };
    write_outputs(
        &common.out,
        &table,
        "convergence",
        source,
        json!({
            "omega1_cm1": omega1_cm1,
            "omega2_cm1": omega2_cm1,
            "gamma_sensor": gamma,
            "emission_op": op,
            "eps_cm1": eps_list.iter().map(|(_, v)| *v).collect::<Vec<_>>(),
            "threads": common.threads,
        }),
        json!({
            "slopes": slopes,
            "warnings": warnings_json(&warnings),
        }),
    )
}
