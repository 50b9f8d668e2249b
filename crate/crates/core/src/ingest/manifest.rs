//! Dataset manifest: a TOML file listing the signal files of a dataset.
//!
//! ```toml
//! version = 1
//! scheme = "cwru10"            # cwru10 | paderborn3 | synthetic
//!
//! [[record]]
//! path = "normal_2hp.mat"      # relative to the manifest's directory
//! label = 0
//! sampling_rate_hz = 48000.0
//! variable = "X099_DE_time"    # MAT files; default: first variable ending in "_DE_time"
//!
//! [[record]]
//! path = "ball_007.csv"        # any other extension is read as one sample per line
//! label = 1
//! sampling_rate_hz = 48000.0
//! has_header = false
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mat5::parse_mat5;
use super::{read_csv_signal, Scheme, SignalRecord};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub scheme: Scheme,
    #[serde(rename = "record", default)]
    pub records: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: usize,
    pub sampling_rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub has_header: bool,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.into(),
            message: e.message().to_string(),
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config {
                path: path.into(),
                message: format!("unsupported manifest version {}", m.version),
            });
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Reads every listed record; relative paths resolve against `base_dir`.
    pub fn load_records(&self, base_dir: &Path) -> Result<Vec<SignalRecord>> {
        self.records.iter().map(|e| e.load(base_dir)).collect()
    }
}

impl ManifestEntry {
    pub fn load(&self, base_dir: &Path) -> Result<SignalRecord> {
        let path = base_dir.join(&self.path);
        let is_mat = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mat"));
        if !is_mat {
            return read_csv_signal(&path, self.label, self.sampling_rate_hz, self.has_header);
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let mut vars = parse_mat5(&bytes)?;
        let name = match &self.variable {
            Some(v) => v.clone(),
            None => vars
                .keys()
                .find(|k| k.ends_with("_DE_time"))
                .cloned()
                .ok_or_else(|| Error::Config {
                    path: path.clone(),
                    message: "no `*_DE_time` variable; set `variable`".into(),
                })?,
        };
        let m = vars.remove(&name).ok_or_else(|| Error::Config {
            path: path.clone(),
            message: format!("variable `{name}` not found"),
        })?;
        SignalRecord::new(
            m.into_vector()?,
            self.sampling_rate_hz,
            self.label,
            format!("{}:{name}", path.display()),
        )
    }
}
