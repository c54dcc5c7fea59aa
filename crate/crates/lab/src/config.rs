//! JSON configuration documents.

use std::fs;
use std::path::Path;

use clustergap_core::model::{validate_config, ExperimentConfig, ValidationReport};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

/// Parses a document without physical validation.
pub fn parse_unchecked(text: &str) -> LabResult<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| LabError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses and validates; hard validation errors are returned as an error,
/// warnings are left in the report.
pub fn parse_config(text: &str) -> LabResult<(ExperimentConfig, ValidationReport)> {
    let cfg = parse_unchecked(text)?;
    let report = validate_config(&cfg);
    if !report.is_ok() {
        return Err(LabError::Validation(report.errors));
    }
    Ok((cfg, report))
}

pub fn load_config(path: &Path) -> LabResult<(ExperimentConfig, ValidationReport)> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_config(&text)
}

/// Canonical JSON with every default spelled out.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

/// SHA-256 of the canonical form, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(emit_config(cfg).as_bytes()))
}
