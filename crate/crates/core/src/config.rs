//! Pipeline configuration read from a TOML file.
//!
//! ```toml
//! [preprocess]
//! smoothing = true
//! grid_size = 101
//! lowess = { fraction = 0.05, robust_iterations = 2 }
//!
//! [train]
//! seed = 0
//! k_min = 1
//! k_max = 8
//! em = { tolerance = 1e-6, max_iterations = 200 }
//!
//! [synth]
//! noise_sigma = 0.002
//!
//! [dataset]
//! elbow_angles_deg = [120.0, 124.0, 128.0]
//! ```
//!
//! Every table and key is optional; missing values take the library
//! defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::TrainConfig;
use crate::preprocess::PreprocessConfig;
use crate::synth::{SynthParams, DEMONSTRATED_ELBOW_ANGLES_DEG};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "DRESSING_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Elbow angles of the synthetic demonstrations, degrees.
    pub elbow_angles_deg: Vec<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            elbow_angles_deg: DEMONSTRATED_ELBOW_ANGLES_DEG.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig,
    pub synth: SynthParams,
    pub dataset: DatasetConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("{}:{line}:{col}", origin.display())
                }
                None => origin.display().to_string(),
            };
            Error::parse(location, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text, path)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}
