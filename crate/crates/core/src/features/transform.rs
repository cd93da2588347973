use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, FeatureSpec, Provenance, Transform};
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Training-side statistics for the bi-clustering inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionParams {
    pub columns: Vec<String>,
    pub transforms: Vec<Transform>,
    pub column_max: Vec<f64>,
    pub epsilon: f64,
}

impl InversionParams {
    pub fn fit(train: &FeatureMatrix, spec: &FeatureSpec) -> Result<Self> {
        check_columns(train.columns(), &spec.names())?;
        if train.n_rows() == 0 {
            return Err(Error::EmptyInput("cannot fit inversion on zero rows".into()));
        }
        let column_max = (0..train.n_cols())
            .map(|j| train.column(j).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(InversionParams {
            columns: spec.names(),
            transforms: spec.transforms(),
            column_max,
            epsilon: spec.reciprocal_epsilon,
        })
    }
}

/// Turns every feature so that large values mean anomalous.
///
/// Max-minus columns use the training maximum and floor at 0 for test values
/// above it. Outputs are nonnegative.
pub fn invert_for_bicluster(matrix: &FeatureMatrix, params: &InversionParams) -> Result<FeatureMatrix> {
    if matrix.provenance() != Provenance::Raw {
        return Err(Error::InvalidParameter(format!(
            "inversion expects a raw matrix, got {:?}",
            matrix.provenance()
        )));
    }
    check_columns(matrix.columns(), &params.columns)?;
    let mut out = Vec::with_capacity(matrix.values().len());
    for (i, row) in matrix.rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out.push(match params.transforms[j] {
                Transform::Identity => {
                    if v < 0.0 {
                        return Err(domain(matrix, i, j, v));
                    }
                    v
                }
                Transform::MaxMinus => (params.column_max[j] - v).max(0.0),
                Transform::Reciprocal => {
                    if v < 0.0 {
                        return Err(domain(matrix, i, j, v));
                    }
                    1.0 / v.max(params.epsilon)
                }
            });
        }
    }
    matrix.with_values(out, Provenance::Inverted)
}

fn domain(matrix: &FeatureMatrix, row: usize, col: usize, value: f64) -> Error {
    Error::TransformDomain {
        feature: matrix.columns()[col].clone(),
        row,
        value,
    }
}

fn check_columns(got: &[String], expected: &[String]) -> Result<()> {
    if got != expected {
        return Err(Error::SchemaMismatch(format!(
            "matrix columns {got:?} do not match {expected:?}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerKind {
    Standardize,
    MinMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColumnStats {
    Standardize { mean: f64, std: f64 },
    MinMax { min: f64, max: f64 },
}

/// Per-column statistics, fitted once on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub kind: ScalerKind,
    pub columns: Vec<String>,
    pub stats: Vec<ColumnStats>,
}

pub fn fit_scaler(train: &FeatureMatrix, kind: ScalerKind) -> Result<ScalerParams> {
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput("cannot fit a scaler on zero rows".into()));
    }
    let stats = (0..train.n_cols())
        .map(|j| match kind {
            ScalerKind::Standardize => {
                let mean = train.column(j).sum::<f64>() / n as f64;
                let var = train.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                ColumnStats::Standardize { mean, std: var.sqrt() }
            }
            ScalerKind::MinMax => ColumnStats::MinMax {
                min: train.column(j).fold(f64::INFINITY, f64::min),
                max: train.column(j).fold(f64::NEG_INFINITY, f64::max),
            },
        })
        .collect();
    Ok(ScalerParams {
        kind,
        columns: train.columns().to_vec(),
        stats,
    })
}

/// Standardize maps zero-variance columns to 0; min-max clamps into [0, 1]
/// and maps constant columns to 0.
pub fn apply_scaler(matrix: &FeatureMatrix, params: &ScalerParams) -> Result<FeatureMatrix> {
    check_columns(matrix.columns(), &params.columns)?;
    let m = matrix.n_cols();
    let out = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| match params.stats[k % m] {
            ColumnStats::Standardize { mean, std } => {
                if std > 0.0 {
                    (v - mean) / std
                } else {
                    0.0
                }
            }
            ColumnStats::MinMax { min, max } => {
                if max > min {
                    ((v - min) / (max - min)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        })
        .collect();
    matrix.with_values(out, Provenance::Scaled)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

/// Divides each row by its norm. All-zero rows pass through.
pub fn normalize_rows(matrix: &FeatureMatrix, norm: Norm) -> Result<FeatureMatrix> {
    let mut out = Vec::with_capacity(matrix.values().len());
    for row in matrix.rows() {
        let n = match norm {
            Norm::L1 => row.iter().map(|v| v.abs()).sum::<f64>(),
            Norm::L2 => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
        };
        if n > 0.0 {
            out.extend(row.iter().map(|v| v / n));
        } else {
            out.extend_from_slice(row);
        }
    }
    let provenance = match norm {
        Norm::L1 => Provenance::NormalizedL1,
        Norm::L2 => Provenance::NormalizedL2,
    };
    matrix.with_values(out, provenance)
}

/// Divides each column by its l1 norm. All-zero columns pass through.
pub fn normalize_columns_l1(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let m = matrix.n_cols();
    let sums: Vec<f64> = (0..m).map(|j| matrix.column(j).map(f64::abs).sum()).collect();
    let out = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let s = sums[k % m];
            if s > 0.0 {
                v / s
            } else {
                v
            }
        })
        .collect();
    matrix.with_values(out, Provenance::NormalizedL1Columns)
}
