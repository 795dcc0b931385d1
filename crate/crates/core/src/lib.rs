//! Citation-network toolkit for comparing conceptual and empirical articles.
//!
//! * [`corpus`]: bibliographic records, journal filtering, eligibility.
//! * [`graph`]: the in-corpus reference -> citer network.
//! * [`disruption`]: disruption scores `D` and `D^l`, plus a brute-force oracle.
//! * [`classify`]: prompt rendering, response parsing, backends, cache, agreement.
//! * [`regress`]: design matrices, OLS, and table output.

pub mod classify;
pub mod corpus;
pub mod disruption;
pub mod graph;
pub mod regress;

pub use corpus::{Corpus, PaperRecord, YearGroup};
pub use disruption::{CiterPartition, DisruptionScore, ThresholdMode};
pub use graph::CitationGraph;

/// Crate version, recorded in pipeline manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
