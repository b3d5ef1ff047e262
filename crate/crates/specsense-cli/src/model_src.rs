// SPDX-License-Identifier: MIT
//! Model ingestion: the builtin dimer or a model file, with a content
//! hash recorded for the output sidecar.

use std::path::Path;

use sha2::{Digest, Sha256};
use specsense::{build_vibronic_dimer, DimerParams, EmitterModel};

use crate::CliError;

/// Identifier accepted by `--model` selecting the builtin dimer.
pub const BUILTIN: &str = "builtin-dimer";

/// A loaded model together with its provenance for the sidecar.
pub struct ModelSource {
    pub model: EmitterModel,
    /// Either the builtin identifier or the file path as given.
    pub source: String,
    /// SHA-256 of the file bytes, or of the canonical serialization for
    /// the builtin model.
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelSource {
    pub fn load(spec: &str) -> Result<Self, CliError> {
        if spec == BUILTIN {
            let model = build_vibronic_dimer(&DimerParams::default()).map_err(CliError::from)?;
            let canonical = model.to_toml_string().map_err(CliError::from)?;
            return Ok(ModelSource {
                model,
                source: BUILTIN.to_string(),
                sha256: hex(&Sha256::digest(canonical.as_bytes())),
            });
        }
        let path = Path::new(spec);
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Model(format!("{} is not UTF-8 text", path.display())))?;
        let model = EmitterModel::from_toml_str(&text).map_err(CliError::from)?;
        Ok(ModelSource {
            model,
            source: spec.to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        })
    }
}
