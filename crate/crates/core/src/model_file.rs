//! Versioned JSON model files.
//!
//! ```json
//! {"format": "arscope-model", "version": 1, "normalization": {...} | null,
//!  "model": {"algorithm": "linsvm", "parameters": {...}}}
//! ```
//!
//! Floats are written with shortest round-trip formatting and parsed
//! exactly, so a reloaded model produces bit-identical scores.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::ScoringModel;
use crate::dataset::NormalizationParams;
use crate::error::{Error, Result};

pub const FORMAT: &str = "arscope-model";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Fitted normalization of the training population, when known.
    pub normalization: Option<NormalizationParams>,
    pub model: ScoringModel,
}

impl ModelFile {
    pub fn new(model: ScoringModel, normalization: Option<NormalizationParams>) -> Self {
        ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            normalization,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::Parse(format!("not a model file: format {:?}", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Parse(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{CosineTemplate, LinearSvm};

    #[test]
    fn rejects_foreign_format() {
        let text = r#"{"format":"other","version":1,"normalization":null,
            "model":{"algorithm":"cosine","parameters":{"template":[1.0]}}}"#;
        assert!(ModelFile::from_json(text).is_err());
    }

    #[test]
    fn rejects_future_version() {
        let file = ModelFile {
            version: 9,
            ..ModelFile::new(ScoringModel::Cosine(CosineTemplate { template: vec![1.0] }), None)
        };
        assert!(ModelFile::from_json(&file.to_json().unwrap()).is_err());
    }

    #[test]
    fn awkward_floats_survive() {
        let model = ScoringModel::LinearSvm(LinearSvm {
            weights: vec![0.1 + 0.2, 1.0 / 3.0, -2.2250738585072014e-308, 1e300],
            bias: std::f64::consts::PI,
            iterations: 3,
            converged: true,
        });
        let file = ModelFile::new(model, None);
        assert_eq!(ModelFile::from_json(&file.to_json().unwrap()).unwrap(), file);
    }
}
