//! Optional TOML run file. Every key mirrors a command-line flag, and flags
//! win over the file.
//!
//! ```toml
//! [model]
//! n = 32
//! h = 0.05
//! stride = 1
//!
//! [initial]
//! k = 1
//! A = 10.0
//!
//! [run]
//! beta_grid = "0.1:3:0.1"
//! n_samples = 4000000
//! output = "runs/k1"
//! jobs = 2
//! store = true
//! analyze = true
//!
//! [analysis]
//! standardize = "correlation"
//! kaiser_threshold = 0.7
//! sensitivity = 1.0
//!
//! [tsne]
//! perplexity = 50.0
//! metric = "euclidean"
//! take = 10000
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub tsne: TsneSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub stride: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub k: Option<u32>,
    #[serde(rename = "A")]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub beta: Option<f64>,
    pub beta_grid: Option<String>,
    pub n_samples: Option<u64>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub store: Option<bool>,
    pub analyze: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub standardize: Option<String>,
    pub kaiser_threshold: Option<f64>,
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsneSection {
    pub perplexity: Option<f64>,
    pub metric: Option<String>,
    pub take: Option<usize>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
