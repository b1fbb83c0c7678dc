//! TOML configuration: one section per module, every key optional, command
//! line flags applied on top. The fully resolved config is echoed next to
//! each run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fdnet::evaluate::{PRESET_LEARNING_RATE, PRESET_WIDTH_CONSTANT};
use fdnet::train::TrainConfig;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub simulate: SimulateSection,
    pub network: NetworkSection,
    pub train: TrainConfig,
    pub experiment: ExperimentSection,
    pub spectrum: SpectrumSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub mean: String,
    pub dims: Vec<usize>,
    pub n: usize,
    pub sigma: f64,
    /// `cosine`, `zero` or `bernoulli`.
    pub kernel: String,
    pub xi_var: f64,
    pub varrho: f64,
    pub k_max: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            mean: "case2".into(),
            dims: vec![15, 15],
            n: 50,
            sigma: 1.0,
            kernel: "cosine".into(),
            xi_var: 1.0,
            varrho: 2.0,
            k_max: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// `practical` or `theory`.
    pub mode: String,
    pub hidden_layers: usize,
    /// Fixed hidden width; overrides the width rule.
    pub width: Option<usize>,
    pub sparsity: Option<usize>,
    pub f_bound: Option<f64>,
    pub varrho: f64,
    pub theta: f64,
    pub c_depth: f64,
    pub c_width: f64,
    pub c_sparsity: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            mode: "practical".into(),
            hidden_layers: 3,
            width: None,
            sparsity: None,
            f_bound: None,
            varrho: 0.0,
            theta: 1.0,
            c_depth: 1.0,
            c_width: 1.0,
            c_sparsity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub preset: String,
    pub reps: usize,
    pub jobs: usize,
    pub mode: String,
    pub sigmas: Option<Vec<f64>>,
    pub grids: Option<Vec<Vec<usize>>>,
    pub ns: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub c_width: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            preset: "case2-2d".into(),
            reps: 100,
            jobs: 0,
            mode: "practical".into(),
            sigmas: None,
            grids: None,
            ns: None,
            epochs: None,
            batch_size: None,
            learning_rate: PRESET_LEARNING_RATE,
            c_width: PRESET_WIDTH_CONSTANT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// `bernoulli` or `cosine`.
    pub kernel: String,
    pub varrho: f64,
    pub d: usize,
    pub xi_var: f64,
    pub normalize_by_d: bool,
    pub k_max: usize,
    pub axis_counts: Vec<usize>,
    /// `formula`, `circulant`, `power` or `dense`.
    pub method: String,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            kernel: "bernoulli".into(),
            varrho: 2.0,
            d: 1,
            xi_var: 1.0,
            normalize_by_d: false,
            k_max: 1000,
            axis_counts: vec![8, 16, 32, 64, 128, 256, 512, 1024],
            method: "formula".into(),
        }
    }
}

/// Reads a config file; a missing path gives the defaults.
pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

/// Writes `config` as TOML to `<output>.config.toml`.
pub fn echo<T: Serialize>(output: &Path, config: &T) -> Result<(), CliError> {
    let text = toml::to_string(config).map_err(|e| CliError::usage(format!("cannot serialize config: {e}")))?;
    let mut name = output.as_os_str().to_owned();
    name.push(".config.toml");
    std::fs::write(&name, text).map_err(|e| CliError::io(format!("cannot write config echo: {e}")))
}
