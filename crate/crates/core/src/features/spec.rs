use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::summary::{Flow, FourPoint};
use super::{FeatureMatrix, Provenance};
use crate::error::{Error, Result};
use crate::ingest::{ColumnRole, DatasetSchema};

const UNSW_NB15: &str = include_str!("../../config/features/unsw-nb15.toml");
const NSL_KDD: &str = include_str!("../../config/features/nsl-kdd.toml");

/// How a feature is turned around for the bi-clustering path, where large
/// values must mean anomalous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Identity,
    /// `column_max - value`, with the maximum taken on training data.
    MaxMinus,
    /// `1 / max(value, epsilon)`.
    Reciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Sum,
    Mean,
    Median,
    Min,
    Max,
}

/// A per-record series: one column, or the ratio of two columns (a zero
/// denominator yields 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesExpr {
    Column(String),
    Ratio(String, String),
}

impl SeriesExpr {
    fn columns(&self) -> Vec<&str> {
        match self {
            SeriesExpr::Column(c) => vec![c],
            SeriesExpr::Ratio(a, b) => vec![a, b],
        }
    }
}

/// `stat(expr)` or a bare column name (read as `mean(column)`, which is the
/// value itself for single-record flows).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Source {
    pub stat: Stat,
    pub expr: SeriesExpr,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse feature source `{s}`"));
        let s = s.trim();
        let (stat, inner) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let stat = match s[..open].trim() {
                    "sum" => Stat::Sum,
                    "mean" => Stat::Mean,
                    "median" => Stat::Median,
                    "min" => Stat::Min,
                    "max" => Stat::Max,
                    _ => return Err(bad()),
                };
                (stat, inner)
            }
            None => (Stat::Mean, s),
        };
        let ident = |t: &str| {
            let t = t.trim();
            if !t.is_empty() && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                Ok(t.to_string())
            } else {
                Err(bad())
            }
        };
        let expr = match inner.split_once('/') {
            Some((a, b)) => SeriesExpr::Ratio(ident(a)?, ident(b)?),
            None => SeriesExpr::Column(ident(inner)?),
        };
        Ok(Source { stat, expr })
    }
}

impl TryFrom<String> for Source {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stat = match self.stat {
            Stat::Sum => "sum",
            Stat::Mean => "mean",
            Stat::Median => "median",
            Stat::Min => "min",
            Stat::Max => "max",
        };
        match &self.expr {
            SeriesExpr::Column(c) => write!(f, "{stat}({c})"),
            SeriesExpr::Ratio(a, b) => write!(f, "{stat}({a} / {b})"),
        }
    }
}

impl From<Source> for String {
    fn from(s: Source) -> String {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub source: Source,
    pub transform: Transform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub dataset: String,
    #[serde(default = "default_epsilon")]
    pub reciprocal_epsilon: f64,
    pub features: Vec<FeatureDef>,
}

fn default_epsilon() -> f64 {
    super::DEFAULT_EPSILON
}

impl FeatureSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: FeatureSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn builtin(id: &str) -> Option<Self> {
        let text = match id {
            "unsw-nb15" => UNSW_NB15,
            "nsl-kdd" => NSL_KDD,
            _ => return None,
        };
        Some(Self::from_toml(text).expect("builtin feature spec is valid"))
    }

    pub fn resolve(id_or_path: &str) -> Result<Self> {
        match Self::builtin(id_or_path) {
            Some(s) => Ok(s),
            None => Self::from_file(Path::new(id_or_path)),
        }
    }

    fn check(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("feature spec lists no features".into()));
        }
        if self.reciprocal_epsilon.is_nan() || self.reciprocal_epsilon <= 0.0 {
            return Err(Error::Config("reciprocal_epsilon must be positive".into()));
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate feature `{}`", w[0])));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn transforms(&self) -> Vec<Transform> {
        self.features.iter().map(|f| f.transform).collect()
    }

    /// Value-column indices each feature reads, checked against `schema`.
    fn resolve_columns(&self, schema: &DatasetSchema) -> Result<Vec<Vec<usize>>> {
        self.features
            .iter()
            .map(|f| {
                f.source
                    .expr
                    .columns()
                    .into_iter()
                    .map(|c| {
                        let fail = |reason: String| Error::FeatureResolution {
                            feature: f.name.clone(),
                            reason,
                        };
                        let idx = schema
                            .value_index(c)
                            .ok_or_else(|| fail(format!("schema `{}` has no value column `{c}`", schema.id())))?;
                        if schema.value_role(idx) == ColumnRole::Categorical {
                            return Err(fail(format!("column `{c}` is categorical")));
                        }
                        Ok(idx)
                    })
                    .collect()
            })
            .collect()
    }
}

/// One row per flow, one column per spec feature, in spec order.
pub fn build_feature_matrix(flows: &[Flow<'_>], schema: &DatasetSchema, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let cols = spec.resolve_columns(schema)?;
    let mut values = Vec::with_capacity(flows.len() * spec.features.len());
    let mut series = Vec::new();
    for flow in flows {
        if flow.records.is_empty() {
            return Err(Error::EmptyGroup);
        }
        for (f, idx) in spec.features.iter().zip(&cols) {
            series.clear();
            for r in &flow.records {
                let num = |i: usize| r.numeric(i).unwrap_or(0.0);
                series.push(match idx.as_slice() {
                    [c] => num(*c),
                    [a, b] => {
                        let den = num(*b);
                        if den == 0.0 {
                            0.0
                        } else {
                            num(*a) / den
                        }
                    }
                    _ => unreachable!(),
                });
            }
            values.push(match f.source.stat {
                Stat::Sum => series.iter().sum(),
                stat => {
                    let fp = FourPoint::of(&series).expect("non-empty flow");
                    match stat {
                        Stat::Mean => fp.mean,
                        Stat::Median => fp.median,
                        Stat::Min => fp.min,
                        Stat::Max => fp.max,
                        Stat::Sum => unreachable!(),
                    }
                }
            });
        }
    }
    FeatureMatrix::new(
        flows.iter().map(|f| f.id.clone()).collect(),
        spec.names(),
        values,
        Provenance::Raw,
    )
}
