//! Model files: the magic line `SENTIMILL-MODEL v1`, then one JSON document
//! holding the algorithm tag, class order, vocabulary id, dimension and
//! parameter arrays, then a trailing newline.

use std::fs;
use std::path::Path;

use super::{ClassifierError, TrainedModel};

pub const MODEL_MAGIC: &str = "SENTIMILL-MODEL v1";

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ClassifierError> {
    let body = serde_json::to_string(model).map_err(|e| ClassifierError::Corrupt(e.to_string()))?;
    let text = format!("{MODEL_MAGIC}\n{body}\n");
    fs::write(path, text).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ClassifierError> {
    let bytes = fs::read(path).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&bytes)
}

pub(crate) fn parse_model(bytes: &[u8]) -> Result<TrainedModel, ClassifierError> {
    if bytes.is_empty() {
        return Err(ClassifierError::Corrupt("empty file".into()));
    }
    let text = std::str::from_utf8(bytes).map_err(|e| ClassifierError::Corrupt(e.to_string()))?;
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    if header != MODEL_MAGIC {
        return Err(ClassifierError::VersionMismatch(format!(
            "expected header {MODEL_MAGIC:?}, found {:?}",
            header.chars().take(40).collect::<String>()
        )));
    }
    let body = body
        .strip_suffix('\n')
        .ok_or_else(|| ClassifierError::Corrupt("missing trailing newline".into()))?;
    let model: TrainedModel =
        serde_json::from_str(body).map_err(|e| ClassifierError::Corrupt(e.to_string()))?;
    model.check_shape().map_err(ClassifierError::Corrupt)?;
    Ok(model)
}
