use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl KernelParams {
    pub fn rbf(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(KernelParams {
            kind: KernelKind::Rbf,
            gamma,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)
    }

    /// Kernel value without argument checks; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")))
    }
}

/// exp(-gamma * ||x - y||^2)
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(KernelParams::rbf(gamma)?.eval(x, y))
}

/// `1 / (d * v)` where `v` is the mean per-column population variance.
/// Falls back to 1 when every column is constant.
pub fn scale_gamma(matrix: &FeatureMatrix) -> Result<f64> {
    let (n, d) = (matrix.n_rows(), matrix.n_cols());
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput("cannot derive gamma from an empty matrix".into()));
    }
    let var_sum: f64 = (0..d)
        .map(|j| {
            let mean = matrix.column(j).sum::<f64>() / n as f64;
            matrix.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
        })
        .sum();
    let v = var_sum / d as f64;
    Ok(if v > 0.0 { 1.0 / (d as f64 * v) } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    use super::*;
    use crate::features::Provenance;

    #[test]
    fn closed_forms() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 0.7).unwrap(), 1.0);
        let k = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((k - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn bad_arguments() {
        assert_eq!(rbf_kernel(&[1.0], &[1.0], 0.0).unwrap_err().name(), "InvalidParameter");
        assert_eq!(
            rbf_kernel(&[1.0], &[1.0, 2.0], 1.0).unwrap_err().name(),
            "DimensionError"
        );
    }

    #[test]
    fn scale_heuristic() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &[vec![0.0, 1.0], vec![2.0, 1.0]],
            Provenance::NormalizedL2,
        )
        .unwrap();
        // variances 1 and 0, mean 0.5, d = 2
        assert_eq!(scale_gamma(&m).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn symmetric_and_psd(pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 2..20),
                             gamma in 0.01f64..5.0) {
            let n = pts.len();
            let gram = DMatrix::from_fn(n, n, |i, j| rbf_kernel(&pts[i], &pts[j], gamma).unwrap());
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(gram[(i, j)], gram[(j, i)]);
                }
            }
            let eig = gram.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&l| l >= -1e-8));
        }
    }
}
