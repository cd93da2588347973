//! Insider-attack detection over flow records.
//!
//! Two unsupervised detectors vote on every flow: a bi-clustering detector
//! that peels a weighted flow/feature bipartite graph down to its densest
//! core, and a one-class SVM trained on benign-dominated traffic. A flow is
//! anomalous only when both agree.

pub mod bicluster;
pub mod cli;
pub mod detector;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod ocsvm;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
