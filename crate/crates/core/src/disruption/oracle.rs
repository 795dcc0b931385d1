//! Brute-force citer partition used to cross-check the indexed kernel.
//!
//! Works directly on an edge list: every node is visited and every
//! membership question is a lookup in a set of edge pairs. Shares nothing
//! with the CSR code path.

use std::collections::HashSet;
use std::hash::Hash;

use super::{CiterPartition, DisruptionError, ThresholdMode};
use crate::graph::GraphError;

/// Nodes plus `(reference, citer)` edges. Nodes without edges must be listed
/// explicitly to be valid focal papers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList<N> {
    pub nodes: Vec<N>,
    pub edges: Vec<(N, N)>,
}

impl<N: Clone + PartialEq> EdgeList<N> {
    /// Node set taken from the edge endpoints.
    pub fn from_edges(edges: Vec<(N, N)>) -> Self {
        let mut nodes: Vec<N> = Vec::new();
        for (a, b) in &edges {
            for v in [a, b] {
                if !nodes.contains(v) {
                    nodes.push(v.clone());
                }
            }
        }
        Self { nodes, edges }
    }
}

const SCAN_LIMIT: usize = 32;

pub fn brute_force_partition<N>(
    graph: &EdgeList<N>,
    focal: &N,
    l: u32,
    mode: ThresholdMode,
) -> Result<CiterPartition, DisruptionError>
where
    N: Clone + Eq + Hash + std::fmt::Debug,
{
    let mut parts = brute_force_partitions(graph, focal, &[l], mode)?;
    Ok(parts.pop().expect("one threshold in, one partition out"))
}

/// Same as [`brute_force_partition`] for several thresholds at once; the
/// node scan is shared and only the final comparisons depend on `l`.
pub fn brute_force_partitions<N>(
    graph: &EdgeList<N>,
    focal: &N,
    ls: &[u32],
    mode: ThresholdMode,
) -> Result<Vec<CiterPartition>, DisruptionError>
where
    N: Clone + Eq + Hash + std::fmt::Debug,
{
    if let Some(&l) = ls.iter().find(|&&l| l < 1) {
        return Err(DisruptionError::InvalidThreshold(l));
    }
    if !graph.nodes.contains(focal) {
        return Err(GraphError::UnknownId(format!("{focal:?}")).into());
    }
    // Tiny graphs are scanned directly; hashing would cost more than it saves.
    let links: Option<HashSet<(&N, &N)>> = (graph.edges.len() > SCAN_LIMIT)
        .then(|| graph.edges.iter().map(|(r, c)| (r, c)).collect());
    let cites = |citer: &N, cited: &N| match &links {
        Some(set) => set.contains(&(cited, citer)),
        None => graph.edges.iter().any(|(r, c)| r == cited && c == citer),
    };
    // Edge lists may repeat a link, so citers are counted once each.
    let times_cited = |node: &N| match &links {
        Some(set) => set.iter().filter(|(r, _)| *r == node).count(),
        None => {
            let citers: Vec<&N> = graph
                .edges
                .iter()
                .filter(|(r, _)| r == node)
                .map(|(_, c)| c)
                .collect();
            (0..citers.len())
                .filter(|&i| !citers[..i].contains(&citers[i]))
                .count()
        }
    };

    let references: Vec<(&N, usize)> = graph
        .nodes
        .iter()
        .filter(|r| *r != focal && cites(focal, r))
        .map(|r| (r, times_cited(r)))
        .collect();

    // Per other node: does it cite the focal, and what it shares with the
    // focal's references. In ref_indegree mode a node shares a qualifying
    // reference at `l` exactly when the most cited reference it cites has at
    // least `l` citers; in overlap mode what matters is how many it cites.
    let mut profiles: Vec<(bool, usize)> = Vec::new();
    for p in &graph.nodes {
        if p == focal {
            continue;
        }
        let cited = references.iter().filter(|(r, _)| cites(p, r));
        let shared = match mode {
            ThresholdMode::RefIndegree => cited.map(|&(_, tc)| tc).max().unwrap_or(0),
            ThresholdMode::Overlap => cited.count(),
        };
        profiles.push((cites(p, focal), shared));
    }

    Ok(ls
        .iter()
        .map(|&l| {
            let l_us = l as usize;
            let (mut n_f, mut n_b, mut n_r) = (0, 0, 0);
            for &(cites_focal, shared) in &profiles {
                let (in_b, touches) = match mode {
                    ThresholdMode::RefIndegree => (shared >= l_us, shared >= l_us),
                    ThresholdMode::Overlap => (shared >= l_us, shared >= 1),
                };
                if cites_focal {
                    if in_b {
                        n_b += 1;
                    } else {
                        n_f += 1;
                    }
                } else if touches {
                    n_r += 1;
                }
            }
            CiterPartition {
                n_f,
                n_b,
                n_r,
                l,
                mode,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_figure_network() {
        let g = EdgeList::from_edges(vec![
            ("r", "i"),
            ("i", "p1"),
            ("i", "p2"),
            ("i", "p3"),
            ("r", "p4"),
        ]);
        let p = brute_force_partition(&g, &"i", 1, ThresholdMode::RefIndegree).unwrap();
        assert_eq!((p.n_f, p.n_b, p.n_r), (3, 0, 1));
    }

    #[test]
    fn single_edge_and_unknown_focal() {
        let g = EdgeList::from_edges(vec![("r", "i")]);
        let p = brute_force_partition(&g, &"i", 1, ThresholdMode::RefIndegree).unwrap();
        assert_eq!((p.n_f, p.n_b, p.n_r), (0, 0, 0));
        assert!(brute_force_partition(&g, &"x", 1, ThresholdMode::RefIndegree).is_err());
        assert!(brute_force_partition(&g, &"i", 0, ThresholdMode::Overlap).is_err());
    }
}
