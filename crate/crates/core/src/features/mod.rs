//! Feature construction and the two preprocessing paths.
//!
//! The one-class SVM consumes standardized, l2 row-normalized features. The
//! bi-clustering detector needs a nonnegative matrix where large values mean
//! "suspicious", so its path inverts features whose small values are the
//! suspicious ones, min-max scales into [0, 1] and then l1-normalizes.

mod spec;
mod summary;
mod transform;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spec::{build_feature_matrix, FeatureDef, FeatureSpec, SeriesExpr, Stat, Transform};
pub use summary::{flows_from_table, summarize_flow, Flow, FlowSummary, FourPoint};
pub use transform::{
    apply_scaler, fit_scaler, invert_for_bicluster, normalize_columns_l1, normalize_rows, ColumnStats, InversionParams,
    Norm, ScalerKind, ScalerParams, DEFAULT_EPSILON,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Raw,
    Inverted,
    Scaled,
    NormalizedL1,
    NormalizedL2,
    NormalizedL1Columns,
}

/// Rows are flows, columns are named features. Values are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    row_ids: Vec<String>,
    columns: Vec<String>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl FeatureMatrix {
    /// `values` is row-major with `row_ids.len() * columns.len()` entries.
    pub fn new(row_ids: Vec<String>, columns: Vec<String>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != row_ids.len() * columns.len() {
            return Err(Error::Dimension {
                expected: row_ids.len() * columns.len(),
                got: values.len(),
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            let m = columns.len().max(1);
            return Err(Error::InvalidParameter(format!(
                "non-finite value at row {}, column `{}`",
                p / m,
                columns.get(p % m).map(String::as_str).unwrap_or("?")
            )));
        }
        Ok(FeatureMatrix {
            row_ids,
            columns,
            values,
            provenance,
        })
    }

    pub fn from_rows(
        row_ids: Vec<String>,
        columns: Vec<String>,
        rows: &[Vec<f64>],
        provenance: Provenance,
    ) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(Error::Dimension {
                expected: columns.len(),
                got: r.len(),
            });
        }
        Self::new(row_ids, columns, rows.concat(), provenance)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.columns.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.columns.len() + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[col])
    }

    /// Same shape and labels, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        Self::new(self.row_ids.clone(), self.columns.clone(), values, provenance)
    }

    /// CSV with a `flow_id` column followed by the feature columns.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::io("<csv>", e.into());
        let mut header = vec!["flow_id".to_string()];
        header.extend(self.columns.iter().cloned());
        out.write_record(&header).map_err(err)?;
        for (id, row) in self.row_ids.iter().zip(self.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))
    }
}
