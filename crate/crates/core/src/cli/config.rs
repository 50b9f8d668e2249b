use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Averaging, NoiseSpec, Pipeline};
use crate::ingest::{Scheme, SegmentParams, SynthSpec};

pub const CONFIG_VERSION: u32 = 1;

/// One experiment, read from TOML. Every field has a default, so an empty
/// file runs a 3-channel FaultNet on generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Where artifacts go; `--out` overrides. Relative to the working
    /// directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub pipeline: Pipeline,
    pub evaluation: EvaluationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            output_dir: None,
            dataset: DatasetConfig::default(),
            pipeline: Pipeline::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Must agree with the manifest's scheme when both are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Relative to the config file's directory. Without a manifest the
    /// dataset is generated from `synth`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub synth: SynthSpec,
    pub records_per_class: usize,
    pub segment: SegmentParams,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scheme: None,
            manifest: None,
            synth: SynthSpec::default(),
            records_per_class: 1,
            segment: SegmentParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub k: usize,
    /// Master seed; fold plan, model and noise seeds derive from it.
    pub seed: u64,
    pub averaging: Averaging,
    /// Required by `sweep`; `run` ignores it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            averaging: Averaging::Macro,
            noise: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            path: path.into(),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: path.into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.evaluation.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "evaluation.k must be at least 2, got {}",
                self.evaluation.k
            )));
        }
        if self.dataset.records_per_class == 0 {
            return Err(Error::InvalidConfig(
                "dataset.records_per_class must be positive".into(),
            ));
        }
        if self.dataset.manifest.is_none() && self.dataset.scheme.is_some_and(|s| s != Scheme::Synthetic) {
            return Err(Error::InvalidConfig(
                "a non-synthetic scheme needs dataset.manifest".into(),
            ));
        }
        Ok(())
    }
}

/// Seeds used by one run, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub fold_plan: u64,
    pub model: u64,
    pub noise: u64,
}

impl SeedPlan {
    pub fn new(master: u64, noise_stream: u64) -> Self {
        use crate::seed::derive;
        Self {
            master,
            fold_plan: derive(master, &[0]),
            model: derive(master, &[1]),
            noise: derive(master, &[2, noise_stream]),
        }
    }
}
