use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// A vertex of the flow/feature bipartite graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vertex {
    Flow(usize),
    Feature(usize),
}

impl Vertex {
    pub fn kind(&self) -> &'static str {
        match self {
            Vertex::Flow(_) => "flow",
            Vertex::Feature(_) => "feature",
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            Vertex::Flow(i) | Vertex::Feature(i) => i,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind(), self.index())
    }
}

/// Weighted bipartite graph between flows (matrix rows) and features
/// (matrix columns). An edge exists wherever the matrix entry is positive.
///
/// Vertices are addressed internally by a dense id: flows `0..n_flows`,
/// then features.
#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    n_flows: usize,
    n_features: usize,
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    flow_ids: Vec<String>,
    feature_names: Vec<String>,
}

pub fn build_bigraph(matrix: &FeatureMatrix) -> Result<BipartiteGraph> {
    let (n, m) = (matrix.n_rows(), matrix.n_cols());
    let mut adj = vec![Vec::new(); n + m];
    for (i, row) in matrix.rows().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a < 0.0 {
                return Err(Error::NonNegativityViolation {
                    row: i,
                    col: j,
                    value: a,
                });
            }
            if a > 0.0 {
                adj[i].push((n + j, a));
                adj[n + j].push((i, a));
            }
        }
    }
    let degree = adj.iter().map(|nb| nb.iter().map(|&(_, w)| w).sum()).collect();
    Ok(BipartiteGraph {
        n_flows: n,
        n_features: m,
        adj,
        degree,
        flow_ids: matrix.row_ids().to_vec(),
        feature_names: matrix.columns().to_vec(),
    })
}

impl BipartiteGraph {
    pub fn n_flows(&self) -> usize {
        self.n_flows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_vertices(&self) -> usize {
        self.n_flows + self.n_features
    }

    pub fn n_edges(&self) -> usize {
        self.adj[..self.n_flows].iter().map(Vec::len).sum()
    }

    pub fn flow_ids(&self) -> &[String] {
        &self.flow_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn id_of(&self, v: Vertex) -> Result<usize> {
        match v {
            Vertex::Flow(i) if i < self.n_flows => Ok(i),
            Vertex::Feature(j) if j < self.n_features => Ok(self.n_flows + j),
            _ => Err(Error::UnknownVertex(v.to_string())),
        }
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        if id < self.n_flows {
            Vertex::Flow(id)
        } else {
            Vertex::Feature(id - self.n_flows)
        }
    }

    pub fn label(&self, id: usize) -> &str {
        if id < self.n_flows {
            &self.flow_ids[id]
        } else {
            &self.feature_names[id - self.n_flows]
        }
    }

    /// Neighbors of a dense id with edge weights, in ascending id order.
    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.adj[id]
    }

    /// Cached weighted degree in the full graph.
    pub fn degree(&self, id: usize) -> f64 {
        self.degree[id]
    }

    /// Weighted degree of `v` in the full graph.
    pub fn linkage(&self, v: Vertex) -> Result<f64> {
        Ok(self.degree[self.id_of(v)?])
    }
}
