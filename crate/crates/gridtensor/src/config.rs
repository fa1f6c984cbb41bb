//! The pipeline config file: TOML with one section per command. Every
//! value is optional; command-line flags take precedence.
//!
//! ```toml
//! seed = 3
//! out_dir = "runs/seed3"
//!
//! [build]
//! input = "history.csv"
//! schema = "IPC"
//! target_bins = 100
//!
//! [train]
//! grid = [1, 2, 3, 4, 5]
//! validation = ["val/blackbox.csv", "val/greybox1.csv"]
//!
//! [train.fit]
//! max_outer_iterations = 200
//!
//! [simulate]
//! history = "history.csv"
//! scenarios = ["blackbox", "greybox1"]
//! benign_messages = 13000
//! anomalies = 100
//! ```

use std::path::{Path, PathBuf};

use gridtensor_core::simulator::{PlantConfig, Scenario, ValueRange};
use gridtensor_core::FitOptions;
use serde::Deserialize;

use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GRIDTENSOR_OUT";
pub const DEFAULT_OUT_DIR: &str = "gridtensor-out";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub build: BuildSection,
    pub train: TrainSection,
    pub simulate: SimulateSection,
    pub score: ScoreSection,
    pub evaluate: EvaluateSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub input: Option<PathBuf>,
    pub schema: Option<String>,
    pub target_bins: Option<usize>,
}

/// Also read by `sweep`, which uses `grid` and `validation`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub rank: Option<usize>,
    pub grid: Option<Vec<usize>>,
    pub validation: Vec<PathBuf>,
    pub fit: Option<FitOptions>,
    pub baselines: Option<bool>,
    /// Training log for the baselines; defaults to the build input.
    pub history: Option<PathBuf>,
    pub nmf_points_rank: Option<usize>,
    pub nmf_channel_rank: Option<usize>,
    pub pca_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub history: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    /// Generate the history from a synthetic plant instead of reading one.
    pub plant: Option<PlantConfig>,
    pub scenarios: Vec<Scenario>,
    pub benign_messages: Option<usize>,
    pub anomalies: Option<usize>,
    pub rtu_range: Option<ValueRange>,
    pub points_range: Option<ValueRange>,
    pub start_ms: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub baselines: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub replicate: Option<u64>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Flag, then config file, then the environment, then the default.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}
