// SPDX-License-Identifier: MIT
//! CSV table assembly and the JSON sidecar.
//!
//! Every data command writes a CSV file with a header row plus a JSON
//! sidecar carrying the model hash, the active numerical tolerances, the
//! code version, and command-specific results. Floats are written with
//! Rust's shortest round-trip formatting, so identical inputs yield
//! byte-identical files.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::model_src::ModelSource;
use crate::CliError;

/// A rectangular table of real values with one header per column.
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(headers: Vec<String>) -> Self {
        CsvTable { headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sidecar path for a CSV output path: the extension becomes `.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Numerical tolerances active in the library, recorded verbatim.
fn tolerances() -> Value {
    use specsense::tol;
    json!({
        "steady_residual": tol::STEADY_RESIDUAL,
        "shifted_residual": tol::SHIFTED_RESIDUAL,
        "hierarchy_residual": tol::HIERARCHY_RESIDUAL,
        "im_residue_rel": tol::IM_RESIDUE_REL,
        "im_residue_abs": tol::IM_RESIDUE_ABS,
        "i1_quadrature": tol::I1_QUADRATURE,
        "i2_quadrature": tol::I2_QUADRATURE,
        "oracle_equivalence": tol::ORACLE_EQUIVALENCE,
        "oracle_validity_fraction": tol::ORACLE_VALIDITY_FRACTION,
        "oracle_population_guard": tol::ORACLE_POPULATION_GUARD,
    })
}

/// Writes the CSV and its JSON sidecar next to it.
pub fn write_outputs(
    out: &Path,
    table: &CsvTable,
    command: &str,
    model: &ModelSource,
    parameters: Value,
    results: Value,
) -> Result<(), CliError> {
    let mut sidecar = Map::new();
    sidecar.insert("command".into(), json!(command));
    sidecar.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    sidecar.insert(
        "model".into(),
        json!({ "source": model.source, "sha256": model.sha256 }),
    );
    sidecar.insert("parameters".into(), parameters);
    sidecar.insert("tolerances".into(), tolerances());
    sidecar.insert("results".into(), results);
    let json_text = serde_json::to_string_pretty(&Value::Object(sidecar))
        .expect("sidecar serializes");
    std::fs::write(out, table.render())
        .map_err(|e| CliError::Io(format!("write {}: {e}", out.display())))?;
    let side = sidecar_path(out);
    std::fs::write(&side, json_text + "\n")
        .map_err(|e| CliError::Io(format!("write {}: {e}", side.display())))?;
    Ok(())
}
