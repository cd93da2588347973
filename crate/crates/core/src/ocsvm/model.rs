use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// A trained one-class SVM: f(x) = Σ αᵢ k(svᵢ, x) − ρ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub columns: Vec<String>,
    pub support_vectors: Vec<Vec<f64>>,
    /// Training row of each support vector.
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub kernel: KernelParams,
    pub nu: f64,
    /// Training row count.
    pub m: usize,
    /// Dual objective ½αᵀQα at the solution.
    pub objective: f64,
    pub iterations: usize,
    /// Final KKT gap.
    pub residual: f64,
    /// False when training stopped at the iteration cap with a gap under
    /// ten times the tolerance.
    pub converged: bool,
}

impl OcsvmModel {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Positive inside the learned region, negative outside.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum();
        Ok(s - self.rho)
    }

    pub fn decision_values(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.n_cols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: matrix.n_cols(),
            });
        }
        (0..matrix.n_rows())
            .into_par_iter()
            .map(|i| self.decision_function(matrix.row(i)))
            .collect()
    }

    /// One flag per row, true for anomalies (f < 0). A row exactly on the
    /// boundary counts as benign.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<bool>> {
        Ok(self.decision_values(matrix)?.into_iter().map(is_anomaly).collect())
    }
}

pub fn is_anomaly(decision: f64) -> bool {
    decision < 0.0
}
