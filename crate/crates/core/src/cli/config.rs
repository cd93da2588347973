use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};

pub const OUT_DIR_ENV: &str = "INSIDERFLOW_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// UNSW-NB15 CSV parts, or directories whose `*.csv` files are read in
    /// name order.
    pub unsw_csv: Vec<PathBuf>,
    pub nsl_train: Option<PathBuf>,
    pub nsl_test: Option<PathBuf>,
    /// Schema ids or TOML paths.
    pub unsw_schema: String,
    pub nsl_schema: String,
    /// Feature spec ids or TOML paths.
    pub unsw_features: String,
    pub nsl_features: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            unsw_csv: Vec::new(),
            nsl_train: None,
            nsl_test: None,
            unsw_schema: "unsw-nb15".into(),
            nsl_schema: "nsl-kdd".into(),
            unsw_features: "unsw-nb15".into(),
            nsl_features: "nsl-kdd".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Flows drawn per UNSW-NB15 trial.
    pub sample_size: usize,
    pub train_fraction: f64,
    /// Attack flows are dropped until at most this fraction remains.
    pub attack_rate: f64,
    /// Flows subsampled per NSL-KDD trial; no value uses the whole train file.
    pub nsl_train_size: Option<usize>,
    pub nsl_test_size: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            sample_size: 150_000,
            train_fraction: 0.75,
            attack_rate: 0.034,
            nsl_train_size: Some(52_398),
            nsl_test_size: 17_466,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 5,
            base_seed: 1,
            out_dir: PathBuf::from("results"),
        }
    }
}

/// Everything a run needs. Values come from defaults, then the config file,
/// then the environment, then command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub detector: DetectorConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Defaults, overlaid by `path` when given, then by the environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            cfg.experiment.out_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

/// Expands directories into their `*.csv` files, sorted by name.
pub fn expand_csv_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_setup() {
        let c = RunConfig::default();
        assert_eq!(c.detector.nu, 0.035);
        assert_eq!(c.detector.threshold, 0.055);
        assert_eq!(c.split.sample_size, 150_000);
        assert_eq!(c.split.train_fraction, 0.75);
        assert_eq!(c.split.attack_rate, 0.034);
        assert_eq!(c.experiment.trials, 5);
    }

    #[test]
    fn shipped_default_file_equals_defaults() {
        let text = include_str!("../../config/default.toml");
        assert_eq!(RunConfig::from_toml(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_file_and_round_trip() {
        let c = RunConfig::from_toml("[split]\nsample_size = 20000\n[detector]\nnu = 0.1").unwrap();
        assert_eq!(c.split.sample_size, 20_000);
        assert_eq!(c.split.train_fraction, 0.75);
        assert_eq!(c.detector.nu, 0.1);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(
            RunConfig::from_toml("[split]\nsize = 1").unwrap_err().name(),
            "ConfigError"
        );
    }
}
