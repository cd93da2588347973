use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::graph::{BipartiteGraph, Vertex};
use super::heap::IndexedMinHeap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeelMode {
    /// Keep deleting until the vertex budget is met and return what is left.
    #[default]
    ThresholdStop,
    /// Return the snapshot along the deletion sequence with the highest score.
    BestScore,
}

/// A retained vertex set of a graph. Induced edges are implied: every edge
/// whose endpoints are both retained belongs to the subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    retained: Vec<bool>,
    n_flows: usize,
    score: f64,
}

impl Subgraph {
    pub fn new(graph: &BipartiteGraph, retained: Vec<bool>) -> Result<Self> {
        if retained.len() != graph.n_vertices() {
            return Err(Error::Dimension {
                expected: graph.n_vertices(),
                got: retained.len(),
            });
        }
        let score = score_of(graph, &retained);
        Ok(Subgraph {
            retained,
            n_flows: graph.n_flows(),
            score,
        })
    }

    pub fn contains(&self, id: usize) -> bool {
        self.retained[id]
    }

    pub fn len(&self) -> usize {
        self.retained.iter().filter(|&&r| r).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flows(&self) -> Vec<usize> {
        (0..self.n_flows).filter(|&i| self.retained[i]).collect()
    }

    pub fn features(&self) -> Vec<usize> {
        (self.n_flows..self.retained.len())
            .filter(|&i| self.retained[i])
            .map(|i| i - self.n_flows)
            .collect()
    }

    /// Edges between retained vertices as (flow, feature, weight).
    pub fn edges(&self, graph: &BipartiteGraph) -> Vec<(usize, usize, f64)> {
        let n = graph.n_flows();
        self.flows()
            .into_iter()
            .flat_map(|i| {
                graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&(j, _)| self.retained[j])
                    .map(move |&(j, w)| (i, j - n, w))
            })
            .collect()
    }

    /// Minimum weighted degree over retained vertices, 0 when empty.
    pub fn score(&self) -> f64 {
        self.score
    }

    /// Weighted degree of `v` counting only retained neighbors.
    pub fn linkage(&self, graph: &BipartiteGraph, v: Vertex) -> Result<f64> {
        let id = graph.id_of(v)?;
        if !self.retained[id] {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        Ok(induced_degree(graph, &self.retained, id))
    }
}

fn induced_degree(graph: &BipartiteGraph, retained: &[bool], id: usize) -> f64 {
    graph
        .neighbors(id)
        .iter()
        .filter(|&&(j, _)| retained[j])
        .map(|&(_, w)| w)
        .sum()
}

/// Score recomputed from scratch for an arbitrary vertex set.
pub fn score_of(graph: &BipartiteGraph, retained: &[bool]) -> f64 {
    let min = (0..retained.len())
        .filter(|&i| retained[i])
        .map(|i| induced_degree(graph, retained, i))
        .fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        min
    } else {
        0.0
    }
}

/// Number of vertices peeling stops at: ceil(n * threshold), at least one.
/// The small slack absorbs products like 1000 * 0.055 landing a hair above
/// an integer.
pub fn stop_count(n_vertices: usize, threshold: f64) -> usize {
    ((n_vertices as f64 * threshold - 1e-9).ceil() as usize).max(1)
}

#[derive(Clone, Copy, Debug)]
struct PeelKey {
    deg: f64,
    idx: usize,
    // 0 for flows, 1 for features
    kind: u8,
}

impl PartialEq for PeelKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PeelKey {}

impl Ord for PeelKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.deg
            .total_cmp(&other.deg)
            .then(self.idx.cmp(&other.idx))
            .then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for PeelKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelStep {
    pub vertex: Vertex,
    /// Degree of the vertex when it was deleted.
    pub degree: f64,
    /// Score of the graph left after the deletion.
    pub score_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelTrace {
    pub initial_vertices: usize,
    pub stop_count: usize,
    pub initial_score: f64,
    pub steps: Vec<PeelStep>,
    /// Number of deletions preceding the highest-scoring snapshot; 0 is the
    /// untouched graph. First occurrence wins on ties.
    pub best_snapshot: usize,
}

impl PeelTrace {
    /// Score of snapshot `s` (after `s` deletions).
    pub fn snapshot_score(&self, s: usize) -> f64 {
        if s == 0 {
            self.initial_score
        } else {
            self.steps[s - 1].score_after
        }
    }

    /// One line per deletion: step, kind, index, id, degree, score.
    pub fn write_csv<W: Write>(&self, graph: &BipartiteGraph, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::io("<csv>", e.into());
        out.write_record(["step", "kind", "index", "id", "degree", "score"])
            .map_err(err)?;
        for (s, step) in self.steps.iter().enumerate() {
            let id = graph.id_of(step.vertex)?;
            out.write_record([
                (s + 1).to_string(),
                step.vertex.kind().to_string(),
                step.vertex.index().to_string(),
                graph.label(id).to_string(),
                step.degree.to_string(),
                step.score_after.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Step-wise min-degree peeling over a graph. Degrees are maintained
/// incrementally as neighbors are removed.
pub struct Peeler<'g> {
    graph: &'g BipartiteGraph,
    alive: Vec<bool>,
    degree: Vec<f64>,
    live_neighbors: Vec<usize>,
    heap: IndexedMinHeap<PeelKey>,
}

impl<'g> Peeler<'g> {
    pub fn new(graph: &'g BipartiteGraph) -> Self {
        let n = graph.n_vertices();
        let degree: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
        let keys = (0..n).map(|i| key(graph, i, degree[i])).collect();
        Peeler {
            graph,
            alive: vec![true; n],
            degree,
            live_neighbors: (0..n).map(|i| graph.neighbors(i).len()).collect(),
            heap: IndexedMinHeap::from_keys(keys),
        }
    }

    pub fn n_alive(&self) -> usize {
        self.heap.len()
    }

    pub fn is_alive(&self, id: usize) -> bool {
        self.alive[id]
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    /// Current (incrementally maintained) degree of a live vertex.
    pub fn degree(&self, id: usize) -> f64 {
        self.degree[id]
    }

    /// Minimum live degree, 0 when nothing is left.
    pub fn current_score(&self) -> f64 {
        self.heap.peek().map_or(0.0, |(_, k)| k.deg)
    }

    /// Deletes the minimum-degree vertex and returns it with its degree.
    pub fn step(&mut self) -> Option<(usize, f64)> {
        let (id, k) = self.heap.pop()?;
        self.alive[id] = false;
        for &(j, w) in self.graph.neighbors(id) {
            if !self.alive[j] {
                continue;
            }
            self.live_neighbors[j] -= 1;
            let d = if self.live_neighbors[j] == 0 {
                0.0
            } else {
                (self.degree[j] - w).max(0.0)
            };
            self.degree[j] = d;
            self.heap.decrease_key(j, key(self.graph, j, d));
        }
        Some((id, k.deg))
    }
}

fn key(graph: &BipartiteGraph, id: usize, deg: f64) -> PeelKey {
    let (idx, kind) = match graph.vertex(id) {
        Vertex::Flow(i) => (i, 0),
        Vertex::Feature(j) => (j, 1),
    };
    PeelKey { deg, idx, kind }
}

#[derive(Clone, Debug)]
pub struct PeelResult {
    pub subgraph: Subgraph,
    /// Flow indices retained in the returned subgraph, ascending.
    pub anomalous_flows: Vec<usize>,
    pub trace: PeelTrace,
}

pub fn peel(graph: &BipartiteGraph, threshold: f64, mode: PeelMode) -> Result<PeelResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "peeling threshold must be in (0, 1), got {threshold}"
        )));
    }
    let n = graph.n_vertices();
    if n == 0 {
        return Err(Error::EmptyInput("bipartite graph has no vertices".into()));
    }
    let stop = stop_count(n, threshold);
    let mut peeler = Peeler::new(graph);
    let mut initial_score = peeler.current_score();
    let mut steps = Vec::with_capacity(n.saturating_sub(stop));
    let (mut best, mut best_score) = (0, initial_score);
    while peeler.n_alive() > stop {
        let (id, degree) = peeler.step().expect("heap holds every live vertex");
        let score_after = peeler.current_score();
        steps.push(PeelStep {
            vertex: graph.vertex(id),
            degree,
            score_after,
        });
        if score_after > best_score {
            best = steps.len();
            best_score = score_after;
        }
    }
    let best = refine_best(graph, &mut steps, &mut initial_score, best, best_score);
    let retained = match mode {
        PeelMode::ThresholdStop => peeler.alive,
        PeelMode::BestScore => {
            let mut r = vec![true; n];
            for s in &steps[..best] {
                r[graph.id_of(s.vertex)?] = false;
            }
            r
        }
    };
    let subgraph = Subgraph::new(graph, retained)?;
    Ok(PeelResult {
        anomalous_flows: subgraph.flows(),
        subgraph,
        trace: PeelTrace {
            initial_vertices: n,
            stop_count: stop,
            initial_score,
            steps,
            best_snapshot: best,
        },
    })
}

/// Incrementally maintained degrees drift by a rounding step or so from
/// sums taken from scratch. Snapshots whose recorded score is within that
/// drift of the best are re-scored exactly and the first maximum is kept.
fn refine_best(
    graph: &BipartiteGraph,
    steps: &mut [PeelStep],
    initial_score: &mut f64,
    best: usize,
    best_score: f64,
) -> usize {
    const MAX_CANDIDATES: usize = 64;
    if best_score <= 0.0 {
        return best;
    }
    let slack = 1e-9 * best_score.max(1.0);
    let mut retained = vec![true; graph.n_vertices()];
    let (mut best, mut exact_best) = (best, f64::NEG_INFINITY);
    let mut candidates = 0;
    for s in 0..=steps.len() {
        if s > 0 {
            retained[graph.id_of(steps[s - 1].vertex).expect("vertex from this graph")] = false;
        }
        let recorded = if s == 0 {
            *initial_score
        } else {
            steps[s - 1].score_after
        };
        if recorded < best_score - slack {
            continue;
        }
        let exact = score_of(graph, &retained);
        if s == 0 {
            *initial_score = exact;
        } else {
            steps[s - 1].score_after = exact;
        }
        if exact > exact_best {
            best = s;
            exact_best = exact;
        }
        candidates += 1;
        if candidates == MAX_CANDIDATES {
            break;
        }
    }
    best
}
