//! Versioned model files.
//!
//! A fitted predictor serializes to a JSON document wrapped with a format
//! version, one file per node per sensor per window, e.g.
//! `node_3_temp_short.model`. Floating-point fields round-trip exactly, so
//! a reloaded model produces bit-identical predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convert::Sensor;
use crate::window::WindowKind;

use super::{Predictor, RegressError};

/// Current model file format version.
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    predictor: Predictor,
}

/// Conventional file name for one fitted model.
pub fn model_file_name(node_id: u8, sensor: Sensor, window: WindowKind) -> String {
    format!("node_{node_id}_{}_{window}.model", sensor.file_tag())
}

pub fn save_model(predictor: &Predictor, path: &Path) -> Result<(), RegressError> {
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        predictor: predictor.clone(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| RegressError::ModelFormat {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let tmp = path.with_extension("model.tmp");
    fs::write(&tmp, json).map_err(|source| RegressError::ModelIo {
        action: "write",
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(|source| RegressError::ModelIo {
        action: "rename",
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<Predictor, RegressError> {
    let text = fs::read_to_string(path).map_err(|source| RegressError::ModelIo {
        action: "read",
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| RegressError::ModelFormat {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
    if file.version != MODEL_FILE_VERSION {
        return Err(RegressError::ModelFormat {
            path: path.to_path_buf(),
            msg: format!(
                "unsupported model file version {} (expected {MODEL_FILE_VERSION})",
                file.version
            ),
        });
    }
    Ok(file.predictor)
}
