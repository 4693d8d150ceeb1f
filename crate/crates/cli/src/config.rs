//! TOML configuration. Every key is optional; command-line flags win.
//!
//! ```toml
//! [ingest]
//! rank_column = "Rank"
//! ignore = ["Grade"]
//! categorical = ["Failures"]
//! default_bins = 4
//! [[ingest.numeric]]
//! name = "age"
//! bins = 3
//! [[ingest.score_columns]]
//! name = "G3"
//! direction = "higher-better"
//!
//! [audit]
//! tau = 50
//! k_min = 10
//! k_max = 49
//! bounds = [[10, 10], [20, 20], [30, 30], [40, 40]]
//! alpha = "0.8"
//! engine = "optimized"
//! sort = "canonical"
//!
//! [explain]
//! surrogate = "ridge-linear"
//! lambda = 1e-6
//! max_depth = 6
//! shapley = "exact"
//! permutations = 2000
//! background_rows = 512
//! top_m = 6
//! seed = 0
//! ```

use std::path::Path;

use rankbias::ingest::IngestConfig;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub explain: ExplainSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub tau: Option<u64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub bounds: Option<Vec<(usize, u64)>>,
    pub alpha: Option<String>,
    pub engine: Option<String>,
    pub sort: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainSection {
    pub surrogate: Option<String>,
    pub lambda: Option<f64>,
    pub max_depth: Option<usize>,
    pub shapley: Option<String>,
    pub permutations: Option<usize>,
    pub background_rows: Option<usize>,
    pub top_m: Option<usize>,
    pub seed: Option<u64>,
}

pub fn load(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("malformed config {}: {e}", path.display())))
}
