//! Disruption scores `D = (N_F - N_B) / (N_F + N_B + N_R)` and the
//! threshold variants `D^l`.
//!
//! For a focal paper `i` with in-corpus references `R`, every other paper
//! `p` that cites `i` or some member of `R` is assigned a *strength*:
//!
//! * `ref_indegree`: the largest citation count among the members of `R`
//!   that `p` cites (0 when it cites none). `p` reaches `R_l` iff
//!   strength >= l.
//! * `overlap`: how many members of `R` `p` cites. A citer of `i` is in B
//!   iff strength >= l; a non-citer is in the R class iff strength >= 1.
//!
//! One pass over `citers(r)` for `r` in `R` yields every strength, so all
//! thresholds of a batch are answered from the same profile.

mod oracle;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{CitationGraph, GraphError, NodeIndex};

pub use oracle::{brute_force_partition, brute_force_partitions, EdgeList};

#[derive(Debug, thiserror::Error)]
pub enum DisruptionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("threshold l must be at least 1, got {0}")]
    InvalidThreshold(u32),
    #[error("unknown threshold mode `{0}` (expected ref_indegree or overlap)")]
    UnknownMode(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("malformed disruption table line {line}: {message}")]
    MalformedTable { line: usize, message: String },
}

/// How the threshold `l` restricts the reference relationships counted
/// toward `N_B`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Only references of the focal paper cited at least `l` times qualify.
    #[default]
    RefIndegree,
    /// A citer joins B only if it cites at least `l` of the focal paper's
    /// references.
    Overlap,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::RefIndegree => "ref_indegree",
            ThresholdMode::Overlap => "overlap",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = DisruptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ref_indegree" => Ok(ThresholdMode::RefIndegree),
            "overlap" => Ok(ThresholdMode::Overlap),
            other => Err(DisruptionError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CiterPartition {
    pub n_f: u64,
    pub n_b: u64,
    pub n_r: u64,
    pub l: u32,
    pub mode: ThresholdMode,
}

impl CiterPartition {
    pub fn total(&self) -> u64 {
        self.n_f + self.n_b + self.n_r
    }

    /// `None` when all three counts are zero.
    pub fn score(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let numerator = self.n_f as i64 - self.n_b as i64;
        Some(numerator as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisruptionScore {
    pub paper_id: String,
    pub partition: CiterPartition,
    /// `None` for the undefined (zero denominator) case.
    pub d: Option<f64>,
}

impl DisruptionScore {
    fn new(paper_id: String, partition: CiterPartition) -> Self {
        Self {
            paper_id,
            d: partition.score(),
            partition,
        }
    }
}

/// Reusable per-thread buffers sized to the graph.
struct Scratch {
    epoch: u32,
    cites_focal: Vec<u32>,
    seen: Vec<u32>,
    strength: Vec<u32>,
    touched: Vec<NodeIndex>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            epoch: 0,
            cites_focal: vec![0; n],
            seen: vec![0; n],
            strength: vec![0; n],
            touched: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.cites_focal.fill(0);
            self.seen.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.touched.clear();
        self.epoch
    }
}

/// Strengths of every paper reached from the focal paper's references,
/// split by whether the paper cites the focal paper.
struct FocalProfile {
    citer_count: u64,
    citer_strengths: Vec<u32>,
    other_strengths: Vec<u32>,
}

impl FocalProfile {
    fn compute(
        graph: &CitationGraph,
        focal: NodeIndex,
        mode: ThresholdMode,
        scratch: &mut Scratch,
    ) -> Self {
        let epoch = scratch.next_epoch();
        let citers = graph.citers_of(focal);
        for &c in citers {
            scratch.cites_focal[c as usize] = epoch;
        }
        for &r in graph.references_of_node(focal) {
            let contribution = match mode {
                ThresholdMode::RefIndegree => graph.in_degree(r) as u32,
                ThresholdMode::Overlap => 1,
            };
            for &p in graph.citers_of(r) {
                if p == focal {
                    continue;
                }
                let pi = p as usize;
                if scratch.seen[pi] != epoch {
                    scratch.seen[pi] = epoch;
                    scratch.strength[pi] = 0;
                    scratch.touched.push(p);
                }
                let s = &mut scratch.strength[pi];
                *s = match mode {
                    ThresholdMode::RefIndegree => (*s).max(contribution),
                    ThresholdMode::Overlap => *s + contribution,
                };
            }
        }
        let mut citer_strengths = Vec::new();
        let mut other_strengths = Vec::new();
        for &p in &scratch.touched {
            let s = scratch.strength[p as usize];
            if scratch.cites_focal[p as usize] == epoch {
                citer_strengths.push(s);
            } else {
                other_strengths.push(s);
            }
        }
        Self {
            citer_count: citers.len() as u64,
            citer_strengths,
            other_strengths,
        }
    }

    fn partition(&self, l: u32, mode: ThresholdMode) -> CiterPartition {
        let n_b = self.citer_strengths.iter().filter(|&&s| s >= l).count() as u64;
        let r_threshold = match mode {
            ThresholdMode::RefIndegree => l,
            ThresholdMode::Overlap => 1,
        };
        let n_r = self
            .other_strengths
            .iter()
            .filter(|&&s| s >= r_threshold)
            .count() as u64;
        CiterPartition {
            n_f: self.citer_count - n_b,
            n_b,
            n_r,
            l,
            mode,
        }
    }
}

fn check_threshold(l: u32) -> Result<(), DisruptionError> {
    if l < 1 {
        return Err(DisruptionError::InvalidThreshold(l));
    }
    Ok(())
}

pub fn partition_citers(
    graph: &CitationGraph,
    focal: &str,
    l: u32,
    mode: ThresholdMode,
) -> Result<CiterPartition, DisruptionError> {
    check_threshold(l)?;
    let node = graph.require(focal)?;
    Ok(partition_node(graph, node, l, mode))
}

/// Index-level entry point; `l` must be at least 1.
pub fn partition_node(
    graph: &CitationGraph,
    focal: NodeIndex,
    l: u32,
    mode: ThresholdMode,
) -> CiterPartition {
    let mut scratch = Scratch::new(graph.node_count());
    FocalProfile::compute(graph, focal, mode, &mut scratch).partition(l, mode)
}

/// Partitions of one focal node for several thresholds, sharing one pass.
pub fn partition_node_multi(
    graph: &CitationGraph,
    focal: NodeIndex,
    ls: &[u32],
    mode: ThresholdMode,
) -> Vec<CiterPartition> {
    let mut scratch = Scratch::new(graph.node_count());
    let profile = FocalProfile::compute(graph, focal, mode, &mut scratch);
    ls.iter().map(|&l| profile.partition(l, mode)).collect()
}

pub fn disruption_score(
    graph: &CitationGraph,
    focal: &str,
    l: u32,
    mode: ThresholdMode,
) -> Result<DisruptionScore, DisruptionError> {
    let partition = partition_citers(graph, focal, l, mode)?;
    Ok(DisruptionScore::new(focal.to_string(), partition))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// 0 uses the global rayon pool; 1 runs on the calling thread.
    pub threads: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

/// Scores every `(id, l)` pair. Rows come out in input id order and, within
/// an id, ascending distinct `l`. All ids are resolved before any scoring.
pub fn disruption_batch<S: AsRef<str> + Sync>(
    graph: &CitationGraph,
    ids: &[S],
    ls: &[u32],
    mode: ThresholdMode,
    options: BatchOptions,
) -> Result<Vec<DisruptionScore>, DisruptionError> {
    let mut ls = ls.to_vec();
    ls.sort_unstable();
    ls.dedup();
    for &l in &ls {
        check_threshold(l)?;
    }
    let nodes = ids
        .iter()
        .map(|id| graph.require(id.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;

    let score_one = |scratch: &mut Scratch, node: NodeIndex| -> Vec<DisruptionScore> {
        let profile = FocalProfile::compute(graph, node, mode, scratch);
        ls.iter()
            .map(|&l| DisruptionScore::new(graph.id(node).to_string(), profile.partition(l, mode)))
            .collect()
    };
    let n = graph.node_count();

    let rows: Vec<Vec<DisruptionScore>> = match options.threads {
        1 => {
            let mut scratch = Scratch::new(n);
            nodes.iter().map(|&v| score_one(&mut scratch, v)).collect()
        }
        threads => {
            let run = || {
                nodes
                    .par_iter()
                    .map_init(|| Scratch::new(n), |scratch, &v| score_one(scratch, v))
                    .collect()
            };
            if threads == 0 {
                run()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| DisruptionError::ThreadPool(e.to_string()))?
                    .install(run)
            }
        }
    };
    Ok(rows.into_iter().flatten().collect())
}

/// Renders `d` to six decimals, or `NA` when undefined.
pub fn format_score(d: Option<f64>) -> String {
    match d {
        Some(v) => format!("{v:.6}"),
        None => "NA".to_string(),
    }
}

pub const TABLE_HEADER: [&str; 6] = ["id", "l", "n_f", "n_b", "n_r", "d"];

/// CSV with columns `id,l,n_f,n_b,n_r,d`.
pub fn write_table<W: std::io::Write>(
    scores: &[DisruptionScore],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for s in scores {
        let p = &s.partition;
        w.write_record([
            s.paper_id.clone(),
            p.l.to_string(),
            p.n_f.to_string(),
            p.n_b.to_string(),
            p.n_r.to_string(),
            format_score(s.d),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of a disruption table. `d` keeps its six-decimal rendering
/// precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub paper_id: String,
    pub l: u32,
    pub n_f: u64,
    pub n_b: u64,
    pub n_r: u64,
    pub d: Option<f64>,
}

pub fn read_table<R: std::io::Read>(input: R) -> Result<Vec<TableRow>, DisruptionError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let bad = |message: String| DisruptionError::MalformedTable { line, message };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != TABLE_HEADER.len() {
            return Err(bad(format!("expected 6 fields, got {}", record.len())));
        }
        let int = |k: usize| -> Result<u64, DisruptionError> {
            record[k].parse().map_err(|e| bad(format!("{}: {e}", TABLE_HEADER[k])))
        };
        let d = match &record[5] {
            "NA" => None,
            v => Some(v.parse::<f64>().map_err(|e| bad(format!("d: {e}")))?),
        };
        rows.push(TableRow {
            paper_id: record[0].to_string(),
            l: int(1)? as u32,
            n_f: int(2)?,
            n_b: int(3)?,
            n_r: int(4)?,
            d,
        });
    }
    Ok(rows)
}
