//! Stage-wise pipeline. Every stage reads the artifacts of earlier stages
//! from the output directory and writes its own, so any suffix of the
//! pipeline can be rerun on its own.
//!
//! | stage    | reads                                   | writes |
//! |----------|-----------------------------------------|--------|
//! | ingest   | corpus, allowlist                       | `corpus.jsonl`, `journals.csv` |
//! | graph    | `corpus.jsonl`                          | `edges.tsv`, `degree_stats.txt`, `eligible.txt` |
//! | classify | `corpus.jsonl`, `eligible.txt`          | `classifications.csv`, `agreement.txt` |
//! | disrupt  | `corpus.jsonl`, `edges.tsv`, `eligible.txt` | `disruption.csv` |
//! | regress  | the above                               | `regression.csv`, `table1.md`, `table2.md` |
//! | report   | the above                               | `report.md` |
//!
//! A full run also writes `manifest.json`; a failed stage leaves a `FAILED`
//! marker naming it.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use disrupt_core::classify::{
    agreement_report, classify_batch, BackendConfig, ChatBackend, Classification, ClassifyError,
    HttpBackend, Label, ResponseCache, Source, StubBackend,
};
use disrupt_core::corpus::{
    eligible_ids, filter_journals, parse_allowlist, parse_corpus, year_group, Corpus,
};
use disrupt_core::disruption::{disruption_batch, read_table, write_table, BatchOptions};
use disrupt_core::graph::{build_graph, parse_edge_list};
use disrupt_core::regress::{
    build_design_matrix, emit_table, write_results_csv, Dependent, ObservationRow,
    RegressionResult, TableLayout, TableStyle,
};
use disrupt_core::{CiterPartition, CitationGraph};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, LabelSource, PipelineConfig};

pub const CORPUS: &str = "corpus.jsonl";
pub const JOURNALS: &str = "journals.csv";
pub const EDGES: &str = "edges.tsv";
pub const DEGREE_STATS: &str = "degree_stats.txt";
pub const ELIGIBLE: &str = "eligible.txt";
pub const CLASSIFICATIONS: &str = "classifications.csv";
pub const AGREEMENT: &str = "agreement.txt";
pub const DISRUPTION: &str = "disruption.csv";
pub const REGRESSION: &str = "regression.csv";
pub const TABLE1: &str = "table1.md";
pub const TABLE2: &str = "table2.md";
pub const REPORT: &str = "report.md";
pub const MANIFEST: &str = "manifest.json";
pub const FAILED: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Graph,
    Classify,
    Disrupt,
    Regress,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Graph,
        Stage::Classify,
        Stage::Disrupt,
        Stage::Regress,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Classify => "classify",
            Stage::Disrupt => "disrupt",
            Stage::Regress => "regress",
            Stage::Report => "report",
        }
    }

    /// Files this stage writes.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &[CORPUS, JOURNALS],
            Stage::Graph => &[EDGES, DEGREE_STATS, ELIGIBLE],
            Stage::Classify => &[CLASSIFICATIONS, AGREEMENT],
            Stage::Disrupt => &[DISRUPTION],
            Stage::Regress => &[REGRESSION, TABLE1, TABLE2],
            Stage::Report => &[REPORT],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: missing {artifact}; run the `{needed}` stage first")]
    MissingPrerequisite {
        stage: Stage,
        artifact: PathBuf,
        needed: Stage,
    },
    #[error("{stage}: {cause}")]
    Stage { stage: Stage, cause: String },
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Config(_) => None,
            PipelineError::MissingPrerequisite { stage, .. } | PipelineError::Stage { stage, .. } => {
                Some(*stage)
            }
        }
    }
}

/// Builds the network backend. Replaceable so tests can observe traffic.
pub type BackendFactory =
    Box<dyn Fn(&BackendConfig) -> Result<Box<dyn ChatBackend>, ClassifyError> + Send + Sync>;

fn http_factory() -> BackendFactory {
    Box::new(|config| Ok(Box::new(HttpBackend::from_config(config)?) as Box<dyn ChatBackend>))
}

/// What a stage did, beyond the files it wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageReport {
    pub backend_calls: usize,
    pub cache_hits: usize,
}

pub struct Pipeline {
    config: PipelineConfig,
    backend_factory: BackendFactory,
}

fn hex_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

impl Pipeline {
    /// Validates the config (including that inputs exist) before anything
    /// touches the output directory.
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            config,
            backend_factory: http_factory(),
        })
    }

    pub fn with_backend_factory(mut self, factory: BackendFactory) -> Self {
        self.backend_factory = factory;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn fail(stage: Stage) -> impl Fn(String) -> PipelineError {
        move |cause| PipelineError::Stage { stage, cause }
    }

    fn read(&self, stage: Stage, name: &str, needed: Stage) -> Result<String, PipelineError> {
        let path = self.artifact(name);
        if !path.is_file() {
            return Err(PipelineError::MissingPrerequisite {
                stage,
                artifact: path,
                needed,
            });
        }
        std::fs::read_to_string(&path)
            .map_err(|e| Self::fail(stage)(format!("reading {}: {e}", path.display())))
    }

    fn write(&self, stage: Stage, name: &str, contents: &[u8]) -> Result<(), PipelineError> {
        let path = self.artifact(name);
        std::fs::write(&path, contents)
            .map_err(|e| Self::fail(stage)(format!("writing {}: {e}", path.display())))
    }

    fn load_corpus(&self, stage: Stage) -> Result<Corpus, PipelineError> {
        let text = self.read(stage, CORPUS, Stage::Ingest)?;
        parse_corpus(text.as_bytes()).map_err(|e| Self::fail(stage)(e.to_string()))
    }

    fn load_eligible(&self, stage: Stage) -> Result<Vec<String>, PipelineError> {
        let text = self.read(stage, ELIGIBLE, Stage::Graph)?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }

    fn load_graph(&self, stage: Stage, corpus: &Corpus) -> Result<CitationGraph, PipelineError> {
        let text = self.read(stage, EDGES, Stage::Graph)?;
        let edges = parse_edge_list(&text).map_err(|e| Self::fail(stage)(e.to_string()))?;
        CitationGraph::from_id_edges(corpus.ids().map(str::to_string), &edges)
            .map_err(|e| Self::fail(stage)(format!("{EDGES}: {e}")))
    }

    /// Runs one stage. On failure a `FAILED` marker naming the stage is left
    /// in the output directory.
    pub fn run_stage(&self, stage: Stage) -> Result<StageReport, PipelineError> {
        info!("stage {stage}");
        let result = std::fs::create_dir_all(self.out_dir())
            .map_err(|e| Self::fail(stage)(format!("creating output directory: {e}")))
            .and_then(|_| match stage {
                Stage::Ingest => self.ingest(),
                Stage::Graph => self.graph(),
                Stage::Classify => self.classify(),
                Stage::Disrupt => self.disrupt(),
                Stage::Regress => self.regress(),
                Stage::Report => self.report(),
            });
        if let Err(e) = &result {
            let _ = std::fs::write(self.artifact(FAILED), format!("stage {stage}\n{e}\n"));
        }
        result
    }

    /// Runs every stage in order, then writes the manifest.
    pub fn run(&self) -> Result<StageReport, PipelineError> {
        for stale in [FAILED, MANIFEST] {
            let _ = std::fs::remove_file(self.artifact(stale));
        }
        let mut total = StageReport::default();
        for stage in Stage::ALL {
            let r = self.run_stage(stage)?;
            total.backend_calls += r.backend_calls;
            total.cache_hits += r.cache_hits;
        }
        self.write_manifest()?;
        Ok(total)
    }

    fn ingest(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Ingest;
        let fail = Self::fail(stage);
        let paths = &self.config.paths;
        let file = std::fs::File::open(&paths.corpus)
            .map_err(|e| fail(format!("{}: {e}", paths.corpus.display())))?;
        let corpus = parse_corpus(BufReader::new(file))
            .map_err(|e| fail(format!("{}: {e}", paths.corpus.display())))?;
        let all_counts = corpus.journal_counts();
        let corpus = match &paths.allowlist {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?;
                let (kept, report) = filter_journals(corpus, &parse_allowlist(&text))
                    .map_err(|e| fail(e.to_string()))?;
                info!("kept {} papers, dropped {}", report.kept, report.dropped);
                kept
            }
            None => corpus,
        };
        let kept = corpus.journal_counts();

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| fail(e.to_string());
        w.write_record(["journal", "papers", "kept"]).map_err(csv_err)?;
        for (journal, n) in &all_counts {
            let k = if kept.contains_key(journal) { "yes" } else { "no" };
            w.write_record([journal.as_str(), &n.to_string(), k])
                .map_err(csv_err)?;
        }
        let journals = w.into_inner().map_err(|e| fail(e.to_string()))?;

        self.write(stage, CORPUS, corpus.to_jsonl_string().as_bytes())?;
        self.write(stage, JOURNALS, &journals)?;
        Ok(StageReport::default())
    }

    fn graph(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Graph;
        let corpus = self.load_corpus(stage)?;
        let graph = build_graph(&corpus);
        let eligible = eligible_ids(&corpus, &graph, &self.config.eligibility)
            .map_err(|e| Self::fail(stage)(e.to_string()))?;
        info!(
            "{} nodes, {} edges, {} eligible",
            graph.node_count(),
            graph.edge_count(),
            eligible.len()
        );
        let mut list = eligible.join("\n");
        if !list.is_empty() {
            list.push('\n');
        }
        self.write(stage, EDGES, graph.to_edge_list().as_bytes())?;
        self.write(stage, DEGREE_STATS, graph.degree_stats().render().as_bytes())?;
        self.write(stage, ELIGIBLE, list.as_bytes())?;
        Ok(StageReport::default())
    }

    fn classify(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Classify;
        let fail = Self::fail(stage);
        let corpus = self.load_corpus(stage)?;
        let eligible = self.load_eligible(stage)?;
        let records = eligible
            .iter()
            .map(|id| {
                corpus
                    .get(id)
                    .cloned()
                    .ok_or_else(|| fail(format!("eligible id `{id}` is not in the corpus")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let settings = &self.config.classifier;
        let mut report = StageReport::default();
        let classifications: Vec<Classification> = match settings.label_source {
            LabelSource::Gold => records
                .iter()
                .map(|r| Classification {
                    paper_id: r.id.clone(),
                    label: r.gold_label.map(Label::from).unwrap_or(Label::Other),
                    rationale: "gold label".into(),
                    source: Source::Gold,
                })
                .collect(),
            LabelSource::Classifier => {
                // The stub never sees the cache: its answers must not be
                // mixed with real model responses.
                let (backend, cache): (Box<dyn ChatBackend>, Option<ResponseCache>) =
                    if settings.stub {
                        (Box::new(StubBackend), None)
                    } else {
                        let backend = (self.backend_factory)(&settings.backend)
                            .map_err(|e| fail(e.to_string()))?;
                        let cache = match &self.config.paths.cache {
                            Some(path) => Some(
                                ResponseCache::open(path)
                                    .map_err(|e| fail(format!("{}: {e}", path.display())))?,
                            ),
                            None => None,
                        };
                        (backend, cache)
                    };
                let out = classify_batch(&records, backend.as_ref(), &settings.backend, cache.as_ref())
                    .map_err(|e| fail(e.to_string()))?;
                report.backend_calls = out.stats.backend_calls;
                report.cache_hits = out.stats.cache_hits;
                info!(
                    "{} backend calls, {} cache hits, {} failures",
                    out.stats.backend_calls, out.stats.cache_hits, out.stats.failures
                );
                let mut done = Vec::with_capacity(out.entries.len());
                let mut errors = Vec::new();
                for entry in out.entries {
                    match entry {
                        Ok(c) => done.push(c),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
                if !errors.is_empty() {
                    return Err(fail(format!(
                        "{} of {} records failed; first: {}",
                        errors.len(),
                        records.len(),
                        errors[0]
                    )));
                }
                done
            }
        };

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| fail(e.to_string());
        w.write_record(["id", "label", "rationale"]).map_err(csv_err)?;
        for c in &classifications {
            w.write_record([c.paper_id.as_str(), c.label.as_str(), c.rationale.as_str()])
                .map_err(csv_err)?;
        }
        let table = w.into_inner().map_err(|e| fail(e.to_string()))?;
        let agreement =
            agreement_report(&classifications, &records).map_err(|e| fail(e.to_string()))?;

        self.write(stage, CLASSIFICATIONS, &table)?;
        self.write(stage, AGREEMENT, agreement.render().as_bytes())?;
        Ok(report)
    }

    fn disrupt(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Disrupt;
        let corpus = self.load_corpus(stage)?;
        let graph = self.load_graph(stage, &corpus)?;
        let eligible = self.load_eligible(stage)?;
        let d = &self.config.disruption;
        let scores = disruption_batch(
            &graph,
            &eligible,
            &d.thresholds,
            d.mode,
            BatchOptions { threads: d.threads },
        )
        .map_err(|e| Self::fail(stage)(e.to_string()))?;
        let mut buf = Vec::new();
        write_table(&scores, &mut buf).map_err(|e| Self::fail(stage)(e.to_string()))?;
        self.write(stage, DISRUPTION, &buf)?;
        Ok(StageReport::default())
    }

    fn load_labels(&self, stage: Stage) -> Result<BTreeMap<String, Label>, PipelineError> {
        let fail = Self::fail(stage);
        let text = self.read(stage, CLASSIFICATIONS, Stage::Classify)?;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut labels = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| fail(format!("{CLASSIFICATIONS}: {e}")))?;
            let label: Label = record
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|e: ClassifyError| fail(format!("{CLASSIFICATIONS}: {e}")))?;
            labels.insert(record.get(0).unwrap_or("").to_string(), label);
        }
        Ok(labels)
    }

    /// Regression sample: eligible papers with a conceptual or empirical
    /// label. `Other` labels are dropped from every model.
    pub fn observation_rows(&self, stage: Stage) -> Result<Vec<ObservationRow>, PipelineError> {
        let fail = Self::fail(stage);
        let scores_text = self.read(stage, DISRUPTION, Stage::Disrupt)?;
        let labels = self.load_labels(stage)?;
        let corpus = self.load_corpus(stage)?;
        let graph = self.load_graph(stage, &corpus)?;
        let eligible = self.load_eligible(stage)?;

        let mode = self.config.disruption.mode;
        let mut disruption: BTreeMap<String, BTreeMap<u32, Option<f64>>> = BTreeMap::new();
        for row in read_table(scores_text.as_bytes()).map_err(|e| fail(e.to_string()))? {
            // Recomputed from the counts so no precision is lost to the
            // rendered score.
            let partition = CiterPartition {
                n_f: row.n_f,
                n_b: row.n_b,
                n_r: row.n_r,
                l: row.l,
                mode,
            };
            disruption
                .entry(row.paper_id)
                .or_default()
                .insert(row.l, partition.score());
        }

        let mut rows = Vec::with_capacity(eligible.len());
        let mut dropped = 0;
        for id in &eligible {
            let record = corpus
                .get(id)
                .ok_or_else(|| fail(format!("eligible id `{id}` is not in the corpus")))?;
            let label = labels.get(id).ok_or_else(|| {
                fail(format!(
                    "`{id}` has no classification; rerun the `classify` stage"
                ))
            })?;
            let conceptual = match label {
                Label::Conceptual => true,
                Label::Empirical => false,
                Label::Other => {
                    dropped += 1;
                    continue;
                }
            };
            let scores = disruption.get(id).cloned().ok_or_else(|| {
                fail(format!("`{id}` has no disruption scores; rerun the `disrupt` stage"))
            })?;
            let node = graph.require(id).map_err(|e| fail(e.to_string()))?;
            rows.push(ObservationRow {
                paper_id: id.clone(),
                citations: graph.in_degree(node) as u64,
                disruption: scores,
                year_group: year_group(record.year).map_err(|e| fail(e.to_string()))?,
                n_authors: record.n_authors,
                conceptual: Some(conceptual),
            });
        }
        if dropped > 0 {
            info!("{dropped} papers labeled other left out of the regressions");
        }
        Ok(rows)
    }

    /// Fits every configured model.
    pub fn fit_models(&self, stage: Stage) -> Result<Vec<RegressionResult>, PipelineError> {
        let fail = Self::fail(stage);
        let rows = self.observation_rows(stage)?;
        let mut results = Vec::new();
        for spec in self.config.model_specs()? {
            let fit = build_design_matrix(&rows, &spec)
                .and_then(|m| m.fit())
                .map_err(|e| fail(format!("{}: {e}", spec.name)))?;
            results.push(fit.with_model(&spec.name));
        }
        Ok(results)
    }

    fn regress(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Regress;
        let fail = Self::fail(stage);
        let results = self.fit_models(stage)?;
        let specs = self.config.model_specs()?;
        let (citations, disruption): (Vec<_>, Vec<_>) = results
            .iter()
            .cloned()
            .zip(&specs)
            .partition(|(_, s)| s.dependent == Dependent::Citations);
        let table = |list: Vec<(RegressionResult, _)>, title: &str, style| {
            let list: Vec<RegressionResult> = list.into_iter().map(|(r, _)| r).collect();
            if list.is_empty() {
                return Ok(format!("{title}\n\nNo models configured.\n"));
            }
            emit_table(
                &list,
                &TableLayout {
                    title: title.to_string(),
                    style,
                },
            )
            .map_err(|e| fail(e.to_string()))
        };
        let table1 = table(
            citations,
            "Citation count regressions (OLS)",
            TableStyle::Citations,
        )?;
        let table2 = table(
            disruption,
            "Disruption score regressions (OLS)",
            TableStyle::Disruption,
        )?;
        let mut csv_out = Vec::new();
        write_results_csv(&results, &mut csv_out).map_err(|e| fail(e.to_string()))?;

        self.write(stage, REGRESSION, &csv_out)?;
        self.write(stage, TABLE1, table1.as_bytes())?;
        self.write(stage, TABLE2, table2.as_bytes())?;
        Ok(StageReport::default())
    }

    fn report(&self) -> Result<StageReport, PipelineError> {
        let stage = Stage::Report;
        let fail = Self::fail(stage);
        let journals = self.read(stage, JOURNALS, Stage::Ingest)?;
        let degree = self.read(stage, DEGREE_STATS, Stage::Graph)?;
        let eligible = self.load_eligible(stage)?;
        let labels = self.load_labels(stage)?;
        let agreement = self.read(stage, AGREEMENT, Stage::Classify)?;
        self.read(stage, DISRUPTION, Stage::Disrupt)?;
        let table1 = self.read(stage, TABLE1, Stage::Regress)?;
        let table2 = self.read(stage, TABLE2, Stage::Regress)?;

        let (mut papers, mut kept_papers, mut journal_count, mut kept_journals) = (0, 0, 0, 0);
        let mut reader = csv::Reader::from_reader(journals.as_bytes());
        for record in reader.records() {
            let record = record.map_err(|e| fail(format!("{JOURNALS}: {e}")))?;
            let n: usize = record
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fail(format!("{JOURNALS}: bad paper count")))?;
            papers += n;
            journal_count += 1;
            if record.get(2) == Some("yes") {
                kept_papers += n;
                kept_journals += 1;
            }
        }

        let summary = DegreeSummary::parse(&degree).map_err(|m| fail(format!("{DEGREE_STATS}: {m}")))?;

        let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
        for label in labels.values() {
            *counts.entry(*label).or_default() += 1;
        }

        let mut out = String::new();
        let _ = writeln!(out, "# Pipeline report\n");
        let _ = writeln!(out, "## Corpus\n");
        let _ = writeln!(out, "- papers read: {papers} in {journal_count} journals");
        let _ = writeln!(out, "- papers kept: {kept_papers} in {kept_journals} journals\n");
        let _ = writeln!(out, "## Citation network\n");
        let _ = writeln!(out, "- nodes: {}", summary.nodes);
        let _ = writeln!(out, "- edges: {}", summary.edges);
        let _ = writeln!(out, "- mean citations per paper: {:.3}", summary.mean_degree());
        let _ = writeln!(out, "- most citations: {}", summary.max_in);
        let _ = writeln!(out, "- most references: {}", summary.max_out);
        let _ = writeln!(out, "- papers without citations: {}", summary.zero_in);
        let _ = writeln!(out, "- eligible papers: {}\n", eligible.len());
        let _ = writeln!(out, "## Article types\n");
        for label in [Label::Conceptual, Label::Empirical, Label::Other] {
            let _ = writeln!(out, "- {label}: {}", counts.get(&label).copied().unwrap_or(0));
        }
        let _ = writeln!(out, "\nAgreement with gold labels:\n");
        let _ = writeln!(out, "```\n{}```\n", agreement);
        let _ = writeln!(out, "## Citations\n");
        let _ = writeln!(out, "{table1}");
        let _ = writeln!(out, "## Disruption\n");
        let _ = write!(out, "{table2}");
        self.write(stage, REPORT, out.as_bytes())?;
        Ok(StageReport::default())
    }

    fn write_manifest(&self) -> Result<(), PipelineError> {
        let fail = Self::fail(Stage::Report);
        let paths = &self.config.paths;
        let mut inputs = Vec::new();
        for (role, path) in [
            ("corpus", Some(&paths.corpus)),
            ("allowlist", paths.allowlist.as_ref()),
        ] {
            if let Some(path) = path {
                let bytes = std::fs::read(path)
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?;
                inputs.push(ManifestFile {
                    role: Some(role),
                    file: file_name(path),
                    sha256: hex_sha256(&bytes),
                });
            }
        }
        let mut outputs = Vec::new();
        for stage in Stage::ALL {
            for name in stage.outputs() {
                let bytes = std::fs::read(self.artifact(name))
                    .map_err(|e| fail(format!("{name}: {e}")))?;
                outputs.push(ManifestFile {
                    role: None,
                    file: name.to_string(),
                    sha256: hex_sha256(&bytes),
                });
            }
        }
        let c = &self.config;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: disrupt_core::VERSION,
            inputs,
            settings: Settings {
                eligibility: &c.eligibility,
                disruption: &c.disruption,
                classifier: &c.classifier,
                models: &c.models,
                seed: c.seed,
            },
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| fail(e.to_string()))?;
        text.push('\n');
        std::fs::write(self.artifact(MANIFEST), text)
            .map_err(|e| fail(format!("{MANIFEST}: {e}")))
    }
}

#[derive(Serialize)]
struct ManifestFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<&'static str>,
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Settings<'a> {
    eligibility: &'a disrupt_core::corpus::EligibilityCriteria,
    disruption: &'a crate::config::DisruptionSettings,
    classifier: &'a crate::config::ClassifierSettings,
    models: &'a [String],
    seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    inputs: Vec<ManifestFile>,
    settings: Settings<'a>,
    outputs: Vec<ManifestFile>,
}

/// Totals recovered from a rendered degree histogram.
struct DegreeSummary {
    nodes: usize,
    edges: usize,
    max_in: usize,
    max_out: usize,
    zero_in: usize,
}

impl DegreeSummary {
    fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let mut field = |name: &str| -> Result<usize, String> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(name))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| format!("expected `{name}` line"))
        };
        let nodes = field("nodes")?;
        let edges = field("edges")?;
        let mut s = DegreeSummary {
            nodes,
            edges,
            max_in: 0,
            max_out: 0,
            zero_in: 0,
        };
        for line in text.lines().skip(3) {
            let cells: Vec<usize> = line
                .split('\t')
                .map(|c| c.parse().map_err(|_| format!("bad row `{line}`")))
                .collect::<Result<_, _>>()?;
            let [degree, with_in, with_out] = cells[..] else {
                return Err(format!("bad row `{line}`"));
            };
            if with_in > 0 {
                s.max_in = s.max_in.max(degree);
            }
            if with_out > 0 {
                s.max_out = s.max_out.max(degree);
            }
            if degree == 0 {
                s.zero_in = with_in;
            }
        }
        Ok(s)
    }

    fn mean_degree(&self) -> f64 {
        if self.nodes == 0 {
            0.0
        } else {
            self.edges as f64 / self.nodes as f64
        }
    }
}
