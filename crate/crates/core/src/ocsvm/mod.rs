//! One-class SVM with an RBF kernel, trained by pairwise SMO on the dual.

mod kernel;
mod model;
mod solver;

pub use kernel::{rbf_kernel, scale_gamma, KernelKind, KernelParams};
pub use model::{is_anomaly, OcsvmModel};
pub use solver::{train_ocsvm, TrainParams, DEFAULT_CACHE_MB, DEFAULT_MAX_ITER, DEFAULT_NU, DEFAULT_TOL};
