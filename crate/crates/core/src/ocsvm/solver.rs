use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use super::model::OcsvmModel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const DEFAULT_NU: f64 = 0.035;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_CACHE_MB: usize = 256;

// floor on the curvature of a pair update, as in standard SMO codes
const TAU: f64 = 1e-12;
// rows shorter than this are computed on the calling thread
const PAR_MIN_ROW: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub nu: f64,
    pub kernel: KernelParams,
    pub tol: f64,
    pub max_iter: usize,
    /// Kernel row cache budget in MiB.
    pub cache_mb: usize,
}

impl TrainParams {
    pub fn new(nu: f64, kernel: KernelParams) -> Self {
        TrainParams {
            nu,
            kernel,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            cache_mb: DEFAULT_CACHE_MB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must be in (0, 1], got {}",
                self.nu
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        self.kernel.validate()
    }
}

/// Training rows plus an LRU cache of kernel rows Q[i, ..].
struct KernelRows<'a> {
    x: &'a FeatureMatrix,
    kernel: KernelParams,
    cache: LruCache<usize, Rc<[f64]>>,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a FeatureMatrix, kernel: KernelParams, cache_mb: usize) -> Self {
        let m = x.n_rows();
        let rows = (cache_mb << 20) / (m * std::mem::size_of::<f64>()).max(1);
        let cap = NonZeroUsize::new(rows.clamp(2, m.max(2))).unwrap();
        KernelRows {
            x,
            kernel,
            cache: LruCache::new(cap),
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = self.cache.get(&i) {
            return r.clone();
        }
        let xi = self.x.row(i);
        let m = self.x.n_rows();
        let row: Rc<[f64]> = if m >= PAR_MIN_ROW {
            (0..m)
                .into_par_iter()
                .map(|t| self.kernel.eval(xi, self.x.row(t)))
                .collect::<Vec<_>>()
                .into()
        } else {
            (0..m).map(|t| self.kernel.eval(xi, self.x.row(t))).collect()
        };
        self.cache.put(i, row.clone());
        row
    }
}

/// Solves
///
///   min ½ αᵀQα   s.t.  0 ≤ αᵢ ≤ 1/(νm),  Σαᵢ = 1
///
/// by pairwise SMO with second-order working-set selection, then recovers
/// ρ from the margin support vectors.
pub fn train_ocsvm(train: &FeatureMatrix, params: &TrainParams) -> Result<OcsvmModel> {
    params.validate()?;
    let m = train.n_rows();
    if m < 2 {
        return Err(Error::InsufficientData {
            requested: 2,
            available: m,
        });
    }
    let c = 1.0 / (params.nu * m as f64);
    let mut q = KernelRows::new(train, params.kernel, params.cache_mb);
    let diag: Vec<f64> = (0..m).map(|i| params.kernel.eval(train.row(i), train.row(i))).collect();

    // Fill α greedily from the front: floor(νm) entries at the bound and the
    // remainder on the next one.
    let mut alpha = vec![0.0; m];
    let mut left = 1.0;
    for a in alpha.iter_mut() {
        if left <= c * 1e-12 {
            break;
        }
        *a = c.min(left);
        left -= *a;
    }

    let mut grad = vec![0.0; m];
    for i in (0..m).filter(|&i| alpha[i] > 0.0) {
        let row = q.row(i);
        for (g, k) in grad.iter_mut().zip(row.iter()) {
            *g += alpha[i] * k;
        }
    }

    let mut iter = 0;
    let residual = loop {
        // i: the coordinate that can grow with the smallest gradient
        let mut i = usize::MAX;
        let mut g_up = f64::INFINITY;
        let mut g_low = f64::NEG_INFINITY;
        for t in 0..m {
            if alpha[t] < c && grad[t] < g_up {
                g_up = grad[t];
                i = t;
            }
            if alpha[t] > 0.0 && grad[t] > g_low {
                g_low = grad[t];
            }
        }
        let gap = g_low - g_up;
        if i == usize::MAX || gap < params.tol || iter == params.max_iter {
            break gap.max(0.0);
        }
        iter += 1;

        let qi = q.row(i);
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..m {
            if alpha[t] > 0.0 && grad[t] > g_up {
                let b = grad[t] - g_up;
                let a = diag[i] + diag[t] - 2.0 * qi[t];
                let v = -b * b / if a > 0.0 { a } else { TAU };
                if v < best {
                    best = v;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break gap.max(0.0);
        }
        let qj = q.row(j);
        let curv = diag[i] + diag[j] - 2.0 * qi[j];
        let mut delta = (grad[j] - grad[i]) / if curv > 0.0 { curv } else { TAU };
        if delta >= c - alpha[i] {
            delta = c - alpha[i];
        }
        if delta >= alpha[j] {
            delta = alpha[j];
        }
        if delta == c - alpha[i] {
            alpha[i] = c;
        } else {
            alpha[i] += delta;
        }
        if delta == alpha[j] {
            alpha[j] = 0.0;
        } else {
            alpha[j] -= delta;
        }
        for t in 0..m {
            grad[t] += delta * (qi[t] - qj[t]);
        }
    };

    let converged = residual < params.tol;
    if !converged {
        if residual < 10.0 * params.tol {
            log::warn!(
                "one-class SVM stopped after {iter} iterations with KKT residual {residual:.3e} (tolerance {:.1e})",
                params.tol
            );
        } else {
            return Err(Error::ConvergenceFailure {
                iterations: iter,
                residual,
            });
        }
    }

    let rho = offset(&alpha, &grad, c);
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    let sv: Vec<usize> = (0..m).filter(|&i| alpha[i] > 0.0).collect();
    Ok(OcsvmModel {
        columns: train.columns().to_vec(),
        support_vectors: sv.iter().map(|&i| train.row(i).to_vec()).collect(),
        support_indices: sv.clone(),
        alphas: sv.iter().map(|&i| alpha[i]).collect(),
        rho,
        kernel: params.kernel,
        nu: params.nu,
        m,
        objective,
        iterations: iter,
        residual,
        converged,
    })
}

/// Mean gradient over margin support vectors (0 < α < C). Without any, the
/// median over all support vectors.
fn offset(alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let free: Vec<f64> = (0..alpha.len())
        .filter(|&i| alpha[i] > 0.0 && alpha[i] < c)
        .map(|i| grad[i])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let mut sv: Vec<f64> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).map(|i| grad[i]).collect();
    sv.sort_by(f64::total_cmp);
    let k = sv.len();
    if k % 2 == 1 {
        sv[k / 2]
    } else {
        0.5 * (sv[k / 2 - 1] + sv[k / 2])
    }
}
