//! Seeded random citation graphs for cross-checking.

use disrupt_core::disruption::EdgeList;
use disrupt_core::graph::CitationGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct TestGraph {
    pub graph: CitationGraph,
    pub edges: EdgeList<u32>,
}

/// Zero-padded ids keep string order equal to numeric order.
pub fn node_id(i: u32) -> String {
    format!("n{i:03}")
}

pub fn from_index_edges(n: u32, edges: Vec<(u32, u32)>) -> TestGraph {
    let ids: Vec<String> = (0..n).map(node_id).collect();
    let graph = CitationGraph::from_edges(ids, edges.clone()).expect("valid test graph");
    TestGraph {
        graph,
        edges: EdgeList {
            nodes: (0..n).collect(),
            edges,
        },
    }
}

/// Directed graph on `n` nodes with each ordered pair linked with
/// probability `density`; no self-loops, cycles allowed.
pub fn random_graph(seed: u64, n: u32, density: f64) -> TestGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random_bool(density) {
                edges.push((a, b));
            }
        }
    }
    from_index_edges(n, edges)
}

/// Random size in `2..=max_n` and density in `[0.05, 0.5)`.
pub fn random_small_graph(seed: u64, max_n: u32) -> TestGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.random_range(2..=max_n);
    let density = rng.random_range(0.05..0.5);
    random_graph(seed, n, density)
}
