//! Versioned JSON files.
//!
//! Every JSON document carries a top-level `version` field. Files without it,
//! or with a version other than [`SCHEMA_VERSION`], are rejected before the
//! rest of the document is interpreted.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{at_path, Error, Result};
use crate::model::AssessmentModel;

pub const SCHEMA_VERSION: u64 = 1;

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value
        .get("version")
        .ok_or(Error::MissingVersion)?
        .as_u64()
        .ok_or(Error::MissingVersion)?;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    at_path(path, || from_json_str(&std::fs::read_to_string(path)?))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    at_path(path, || Ok(std::fs::write(path, to_json_string(value)?)?))
}

/// Loads and validates an assessment model file.
pub fn load_model(path: &Path) -> Result<AssessmentModel> {
    let model: AssessmentModel = load_json(path)?;
    at_path(path, || model.validate())?;
    Ok(model)
}
