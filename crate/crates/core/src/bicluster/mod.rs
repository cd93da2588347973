//! Bi-clustering by greedy minimum-degree peeling.
//!
//! Flows and features form a weighted bipartite graph. Repeatedly deleting
//! the least connected vertex leaves a dense block of flows sharing high
//! feature values; the flows left in that block are flagged as anomalous.

mod graph;
mod heap;
mod peel;

pub use graph::{build_bigraph, BipartiteGraph, Vertex};
pub use heap::IndexedMinHeap;
pub use peel::{peel, score_of, stop_count, PeelMode, PeelResult, PeelStep, PeelTrace, Peeler, Subgraph};
