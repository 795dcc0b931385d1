//! Immutable in-corpus citation network.
//!
//! Node indices are the rank of each id in ascending id order, so index order
//! and id order coincide. Links run from a cited reference to the citing
//! paper. Both directions are stored as compressed sparse rows with sorted
//! neighbor lists:
//!
//!   citers(v)     = cite_targets[cite_offsets[v] .. cite_offsets[v + 1]]
//!   references(v) = ref_targets[ref_offsets[v] .. ref_offsets[v + 1]]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::corpus::Corpus;

pub type NodeIndex = u32;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("unknown paper id `{0}`")]
    UnknownId(String),
    #[error("node ids must be strictly ascending (at position {0})")]
    UnsortedIds(usize),
    #[error("edge endpoint {0} out of range for {1} nodes")]
    IndexOutOfRange(NodeIndex, usize),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge list line {line}: {message}")]
    MalformedEdge { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    ids: Arc<[String]>,
    cite_offsets: Vec<u32>,
    cite_targets: Vec<NodeIndex>,
    ref_offsets: Vec<u32>,
    ref_targets: Vec<NodeIndex>,
}

/// Builds the network: one link `r -> i` for every distinct reference `r` of
/// `i` that is itself in the corpus. Out-of-corpus references are ignored.
pub fn build_graph(corpus: &Corpus) -> CitationGraph {
    let ids: Arc<[String]> = corpus.ids().map(str::to_string).collect();
    let mut edges = Vec::new();
    for (citer, record) in corpus.records().enumerate() {
        for reference in &record.references {
            if let Ok(r) = ids.binary_search(reference) {
                edges.push((r as NodeIndex, citer as NodeIndex));
            }
        }
    }
    CitationGraph::from_edges(ids, edges)
        .expect("corpus records are normalized: ids sorted, no self references")
}

impl CitationGraph {
    /// `ids` must be strictly ascending; `edges` are `(reference, citer)`
    /// index pairs. Duplicate edges collapse; self-loops are rejected.
    pub fn from_edges(
        ids: impl Into<Arc<[String]>>,
        mut edges: Vec<(NodeIndex, NodeIndex)>,
    ) -> Result<Self, GraphError> {
        let ids = ids.into();
        if let Some(pos) = ids.windows(2).position(|w| w[0] >= w[1]) {
            return Err(GraphError::UnsortedIds(pos + 1));
        }
        let n = ids.len();
        for &(r, c) in &edges {
            for v in [r, c] {
                if v as usize >= n {
                    return Err(GraphError::IndexOutOfRange(v, n));
                }
            }
            if r == c {
                return Err(GraphError::SelfLoop(ids[r as usize].clone()));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let (cite_offsets, cite_targets) = compress(n, edges.iter().copied());
        edges.sort_unstable_by_key(|&(r, c)| (c, r));
        let (ref_offsets, ref_targets) = compress(n, edges.iter().map(|&(r, c)| (c, r)));

        Ok(Self {
            ids,
            cite_offsets,
            cite_targets,
            ref_offsets,
            ref_targets,
        })
    }

    /// Builds a graph over `ids` (any order, unique) from `(reference, citer)`
    /// id pairs as read from an edge dump.
    pub fn from_id_edges<S: AsRef<str>>(
        ids: impl IntoIterator<Item = String>,
        edges: &[(S, S)],
    ) -> Result<Self, GraphError> {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_unstable();
        let lookup = |s: &str| {
            ids.binary_search_by(|probe| probe.as_str().cmp(s))
                .map(|i| i as NodeIndex)
                .map_err(|_| GraphError::UnknownId(s.to_string()))
        };
        let edges = edges
            .iter()
            .map(|(r, c)| Ok((lookup(r.as_ref())?, lookup(c.as_ref())?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::from_edges(ids, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.cite_targets.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: NodeIndex) -> &str {
        &self.ids[node as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIndex> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| i as NodeIndex)
    }

    pub fn require(&self, id: &str) -> Result<NodeIndex, GraphError> {
        self.index_of(id)
            .ok_or_else(|| GraphError::UnknownId(id.to_string()))
    }

    /// Papers citing `node`, ascending.
    #[inline]
    pub fn citers_of(&self, node: NodeIndex) -> &[NodeIndex] {
        let v = node as usize;
        &self.cite_targets[self.cite_offsets[v] as usize..self.cite_offsets[v + 1] as usize]
    }

    /// In-corpus references of `node`, ascending.
    #[inline]
    pub fn references_of_node(&self, node: NodeIndex) -> &[NodeIndex] {
        let v = node as usize;
        &self.ref_targets[self.ref_offsets[v] as usize..self.ref_offsets[v + 1] as usize]
    }

    /// Number of in-corpus citations ("marketing citations").
    #[inline]
    pub fn in_degree(&self, node: NodeIndex) -> usize {
        let v = node as usize;
        (self.cite_offsets[v + 1] - self.cite_offsets[v]) as usize
    }

    /// Number of in-corpus references ("marketing references").
    #[inline]
    pub fn out_degree(&self, node: NodeIndex) -> usize {
        let v = node as usize;
        (self.ref_offsets[v + 1] - self.ref_offsets[v]) as usize
    }

    pub fn citers(&self, id: &str) -> Result<Vec<&str>, GraphError> {
        let node = self.require(id)?;
        Ok(self.citers_of(node).iter().map(|&c| self.id(c)).collect())
    }

    pub fn references_of(&self, id: &str) -> Result<Vec<&str>, GraphError> {
        let node = self.require(id)?;
        Ok(self
            .references_of_node(node)
            .iter()
            .map(|&r| self.id(r))
            .collect())
    }

    /// All `(reference, citer)` pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIndex, NodeIndex)> + '_ {
        (0..self.node_count() as NodeIndex)
            .flat_map(move |r| self.citers_of(r).iter().map(move |&c| (r, c)))
    }

    /// Tab-separated `reference<TAB>citer` lines, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count() * 24);
        for (r, c) in self.edges() {
            let _ = writeln!(out, "{}\t{}", self.id(r), self.id(c));
        }
        out
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let mut in_histogram = BTreeMap::new();
        let mut out_histogram = BTreeMap::new();
        for v in 0..self.node_count() as NodeIndex {
            *in_histogram.entry(self.in_degree(v)).or_insert(0) += 1;
            *out_histogram.entry(self.out_degree(v)).or_insert(0) += 1;
        }
        DegreeStats {
            nodes: self.node_count(),
            edges: self.edge_count(),
            in_histogram,
            out_histogram,
        }
    }
}

fn compress(
    n: usize,
    sorted_pairs: impl Iterator<Item = (NodeIndex, NodeIndex)>,
) -> (Vec<u32>, Vec<NodeIndex>) {
    let mut offsets = vec![0u32; n + 1];
    let mut targets = Vec::new();
    for (src, dst) in sorted_pairs {
        offsets[src as usize + 1] += 1;
        targets.push(dst);
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    (offsets, targets)
}

/// Parses a `reference<TAB>citer` edge dump.
pub fn parse_edge_list(text: &str) -> Result<Vec<(String, String)>, GraphError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut parts = l.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(r), Some(c), None) if !r.is_empty() && !c.is_empty() => {
                    Ok((r.to_string(), c.to_string()))
                }
                _ => Err(GraphError::MalformedEdge {
                    line: i + 1,
                    message: "expected two tab-separated ids".into(),
                }),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeStats {
    pub nodes: usize,
    pub edges: usize,
    /// Citation count -> number of papers.
    pub in_histogram: BTreeMap<usize, usize>,
    /// Reference count -> number of papers.
    pub out_histogram: BTreeMap<usize, usize>,
}

impl DegreeStats {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes\t{}", self.nodes);
        let _ = writeln!(out, "edges\t{}", self.edges);
        let _ = writeln!(out, "degree\tcitations\treferences");
        let mut keys: Vec<usize> = self
            .in_histogram
            .keys()
            .chain(self.out_histogram.keys())
            .copied()
            .collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let _ = writeln!(
                out,
                "{k}\t{}\t{}",
                self.in_histogram.get(&k).copied().unwrap_or(0),
                self.out_histogram.get(&k).copied().unwrap_or(0)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PaperRecord;

    fn corpus(spec: &[(&str, &[&str])]) -> Corpus {
        Corpus::from_records(spec.iter().map(|(id, refs)| PaperRecord {
            id: id.to_string(),
            title: "t".into(),
            abstract_text: "a".into(),
            journal: "J".into(),
            year: 2000,
            n_authors: 1,
            references: refs.iter().map(|s| s.to_string()).collect(),
            gold_label: None,
        }))
        .unwrap()
    }

    #[test]
    fn out_of_corpus_references_are_ignored() {
        let g = build_graph(&corpus(&[("i", &["r1", "r2", "r3"]), ("r2", &[]), ("r3", &[])]));
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.to_edge_list(), "r2\ti\nr3\ti\n");
        assert_eq!(g.references_of("i").unwrap(), vec!["r2", "r3"]);
        assert_eq!(g.citers("r2").unwrap(), vec!["i"]);
    }

    #[test]
    fn no_cross_references_means_no_edges() {
        let g = build_graph(&corpus(&[("a", &["x"]), ("b", &[])]));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 2);
        assert!(g.citers("a").unwrap().is_empty());
        assert!(g.references_of("a").unwrap().is_empty());
    }

    #[test]
    fn two_cycle_is_legal() {
        let g = build_graph(&corpus(&[("a", &["b"]), ("b", &["a"])]));
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.citers("a").unwrap(), vec!["b"]);
        assert_eq!(g.citers("b").unwrap(), vec!["a"]);
    }

    #[test]
    fn unknown_ids_error() {
        let g = build_graph(&corpus(&[("a", &[])]));
        assert!(matches!(g.citers("zz"), Err(GraphError::UnknownId(_))));
        assert!(matches!(g.references_of("zz"), Err(GraphError::UnknownId(_))));
    }

    #[test]
    fn degree_stats_triangle_and_empty() {
        // r -> i, r -> j, i -> j
        let g = build_graph(&corpus(&[("r", &[]), ("i", &["r"]), ("j", &["r", "i"])]));
        let stats = g.degree_stats();
        assert_eq!((stats.nodes, stats.edges), (3, 3));
        assert_eq!(stats.in_histogram, BTreeMap::from([(0, 1), (1, 1), (2, 1)]));

        let empty = build_graph(&Corpus::new()).degree_stats();
        assert_eq!((empty.nodes, empty.edges), (0, 0));
        assert!(empty.in_histogram.is_empty());
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        assert!(matches!(
            CitationGraph::from_edges(ids.clone(), vec![(0, 0)]),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            CitationGraph::from_edges(ids.clone(), vec![(0, 5)]),
            Err(GraphError::IndexOutOfRange(5, 2))
        ));
        assert!(matches!(
            CitationGraph::from_edges(vec!["b".to_string(), "a".to_string()], vec![]),
            Err(GraphError::UnsortedIds(1))
        ));
        let g = CitationGraph::from_edges(ids, vec![(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_graph(&corpus(&[("r", &[]), ("i", &["r"]), ("j", &["r", "i"])]));
        let edges = parse_edge_list(&g.to_edge_list()).unwrap();
        let rebuilt = CitationGraph::from_id_edges(g.ids().to_vec(), &edges).unwrap();
        assert_eq!(rebuilt, g);
        assert!(parse_edge_list("a b\n").is_err());
    }
}
