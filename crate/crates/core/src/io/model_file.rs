//! The `spv1` model file: a TOML key tree holding the model, its scaling,
//! the fit configuration and report, closed by an `[end]` table so that a
//! truncated file is detected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IoError, Result, ScalingSpec};
use crate::pursuit::{FitConfig, FitReport, SymbolicModel};

pub const FORMAT_VERSION: &str = "spv1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: SymbolicModel,
    pub scaling: ScalingSpec,
    pub config: FitConfig,
    pub report: Option<FitReport>,
}

#[derive(Serialize, Deserialize)]
struct End {
    format: String,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    model: SymbolicModel,
    scaling: ScalingSpec,
    config: FitConfig,
    report: Option<FitReport>,
    end: End,
}

pub fn model_to_string(file: &ModelFile) -> Result<String> {
    let doc = Document {
        format: FORMAT_VERSION.into(),
        model: file.model.clone(),
        scaling: file.scaling.clone(),
        config: file.config.clone(),
        report: file.report.clone(),
        end: End {
            format: FORMAT_VERSION.into(),
        },
    };
    let body = toml::to_string(&doc).map_err(|e| IoError::Schema(e.to_string()))?;
    Ok(format!("# sympursuit symbolic model\n{body}"))
}

pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| IoError::Schema(e.to_string()))?;
    let found = table
        .get("format")
        .and_then(|v| v.as_str())
        .ok_or_else(|| IoError::Schema("missing format field".into()))?;
    if found != FORMAT_VERSION {
        return Err(IoError::VersionMismatch { found: found.into() });
    }
    if !table.contains_key("end") {
        return Err(IoError::Schema("missing [end] table; file truncated?".into()));
    }
    let doc: Document = table.try_into().map_err(|e: toml::de::Error| IoError::Schema(e.to_string()))?;
    if doc.end.format != FORMAT_VERSION {
        return Err(IoError::VersionMismatch { found: doc.end.format });
    }
    doc.model.validate().map_err(|e| IoError::Schema(e.to_string()))?;
    if doc.model.dim != doc.scaling.dim() {
        return Err(IoError::Schema(format!(
            "model has {} features, scaling keeps {}",
            doc.model.dim,
            doc.scaling.dim()
        )));
    }
    Ok(ModelFile {
        model: doc.model,
        scaling: doc.scaling,
        config: doc.config,
        report: doc.report,
    })
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, model_to_string(file)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    model_from_str(&std::fs::read_to_string(path)?)
}
