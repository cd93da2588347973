use serde::{Deserialize, Serialize};

use crate::bicluster::PeelMode;
use crate::error::{Error, Result};
use crate::ocsvm::{DEFAULT_CACHE_MB, DEFAULT_MAX_ITER, DEFAULT_NU, DEFAULT_TOL};

pub const DEFAULT_THRESHOLD: f64 = 0.055;

/// RBF width: a fixed value or the `scale` heuristic fitted on training data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    #[default]
    #[serde(with = "scale_tag")]
    Scale,
}

mod scale_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("scale")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "scale" => Ok(()),
            other => Err(de::Error::custom(format!("unknown gamma `{other}`"))),
        }
    }
}

/// How the bi-clustering matrix is normalized after min-max scaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiclusterNorm {
    /// Each flow row sums to one. Every non-empty flow vertex then starts
    /// with weighted degree exactly 1, which leaves peeling little to work
    /// with among flows.
    L1Rows,
    /// Each feature column sums to one over the flows being scored.
    #[default]
    L1Columns,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub nu: f64,
    pub threshold: f64,
    pub peel_mode: PeelMode,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
    pub bicluster_norm: BiclusterNorm,
    /// Feature spec id or path; defaults to the one named after the schema.
    pub feature_spec: Option<String>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            nu: DEFAULT_NU,
            threshold: DEFAULT_THRESHOLD,
            peel_mode: PeelMode::ThresholdStop,
            gamma: Gamma::Scale,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            cache_mb: DEFAULT_CACHE_MB,
            bicluster_norm: BiclusterNorm::L1Columns,
            feature_spec: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must be in (0, 1], got {}",
                self.nu
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}
