//! Synthetic citation corpora with a planted effect for conceptual papers.
//!
//! Papers arrive in publication order. Each one draws its references from
//! an urn holding one ball per earlier paper plus one per citation received,
//! which gives preferential attachment. Some references are copied from the
//! reference lists of references already chosen, so citers tend to cite a
//! paper together with its own references.
//!
//! The planted effect `e` works on conceptual papers in two ways: they get
//! `e` extra balls (in expectation) each time a ball is added for them, and
//! a paper citing one bypasses its references entirely with probability
//! `e / (1 + e)`. With `e = 0` the label is pure noise.

use std::path::Path;

use disrupt_core::corpus::{Corpus, CorpusError, GoldLabel, PaperRecord};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const JOURNALS: [&str; 8] = [
    "Journal of Synthetic Marketing",
    "Synthetic Marketing Science",
    "Journal of Synthetic Consumer Research",
    "Synthetic Marketing Letters",
    "Journal of Synthetic Retailing",
    "International Journal of Synthetic Research in Marketing",
    "Journal of the Synthetic Academy of Marketing Science",
    "Synthetic Quantitative Marketing",
];

/// Journal used for a small share of papers and left off the allowlist.
pub const OFF_LIST_JOURNAL: &str = "Synthetic Off-List Review";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_papers: usize,
    pub seed: u64,
    pub effect: f64,
    pub conceptual_share: f64,
    pub refs_min: usize,
    pub refs_max: usize,
    /// Chance that a reference is copied from an already chosen reference.
    pub copy_prob: f64,
    /// Share of papers in [`OFF_LIST_JOURNAL`].
    pub off_list_share: f64,
    pub year_min: i32,
    pub year_max: i32,
}

impl SynthParams {
    pub fn new(n_papers: usize, seed: u64, effect: f64) -> Self {
        Self {
            n_papers,
            seed,
            effect,
            conceptual_share: 0.22,
            refs_min: 14,
            refs_max: 25,
            copy_prob: 0.4,
            off_list_share: 0.03,
            year_min: 1991,
            year_max: 2020,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_papers < 10 {
            return bad(format!("n_papers must be at least 10, got {}", self.n_papers));
        }
        if !(self.effect >= 0.0 && self.effect.is_finite()) {
            return bad(format!("effect must be finite and >= 0, got {}", self.effect));
        }
        for (name, p) in [
            ("conceptual_share", self.conceptual_share),
            ("copy_prob", self.copy_prob),
            ("off_list_share", self.off_list_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.refs_min > self.refs_max {
            return bad(format!(
                "refs_min {} > refs_max {}",
                self.refs_min, self.refs_max
            ));
        }
        if self.year_min > self.year_max {
            return bad(format!(
                "year_min {} > year_max {}",
                self.year_min, self.year_max
            ));
        }
        Ok(())
    }
}

const WORDS: [&str; 48] = [
    "brand", "consumer", "loyalty", "pricing", "channel", "retail", "advertising",
    "satisfaction", "service", "quality", "market", "orientation", "segment",
    "customer", "value", "equity", "innovation", "adoption", "promotion", "sales",
    "firm", "strategy", "performance", "relationship", "trust", "commitment",
    "choice", "preference", "attitude", "behavior", "model", "theory", "framework",
    "survey", "experiment", "panel", "data", "evidence", "effect", "response",
    "digital", "social", "network", "platform", "word", "mouth", "search", "decision",
];

/// `count` extra balls for a weight of `1 + e`: the integer part of `e`
/// plus one more with probability equal to its fractional part.
fn extra_balls(rng: &mut ChaCha8Rng, effect: f64) -> usize {
    let whole = effect.floor();
    let mut n = whole as usize;
    if rng.random::<f64>() < effect - whole {
        n += 1;
    }
    n
}

fn text(rng: &mut ChaCha8Rng, min_chars: usize) -> String {
    let mut s = String::new();
    while s.len() < min_chars {
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(WORDS.choose(rng).expect("word list is non-empty"));
    }
    s
}

pub fn synth_records(params: &SynthParams) -> Result<Vec<PaperRecord>, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_papers;

    // Volume grows linearly over the years.
    let span = (params.year_max - params.year_min) as usize + 1;
    let weights: Vec<f64> = (0..span).map(|i| 1.0 + 0.1 * i as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut years = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        let upto = ((acc / total) * n as f64).round() as usize;
        while years.len() < upto.min(n) {
            years.push(params.year_min + i as i32);
        }
    }
    while years.len() < n {
        years.push(params.year_max);
    }

    let conceptual: Vec<bool> = (0..n)
        .map(|_| rng.random::<f64>() < params.conceptual_share)
        .collect();
    let mut urn: Vec<u32> = Vec::with_capacity(n * (params.refs_max + 2));
    let mut references: Vec<Vec<u32>> = Vec::with_capacity(n);
    let bypass = params.effect / (1.0 + params.effect);

    for i in 0..n {
        let want = rng.random_range(params.refs_min..=params.refs_max).min(i);
        let mut chosen: Vec<u32> = Vec::with_capacity(want);
        // References of conceptual papers this paper decided to bypass.
        let mut avoid: Vec<u32> = Vec::new();
        let mut attempts = 0;
        while chosen.len() < want && attempts < want * 20 {
            attempts += 1;
            let mut pick = None;
            if !chosen.is_empty() && rng.random::<f64>() < params.copy_prob {
                let via = *chosen.choose(&mut rng).expect("non-empty");
                pick = references[via as usize].choose(&mut rng).copied();
            }
            let r = match pick {
                Some(r) => r,
                None => *urn.choose(&mut rng).expect("urn holds every earlier paper"),
            };
            if chosen.contains(&r) || avoid.contains(&r) {
                continue;
            }
            chosen.push(r);
            if conceptual[r as usize] && rng.random::<f64>() < bypass {
                let skipped = &references[r as usize];
                avoid.extend_from_slice(skipped);
                chosen.retain(|c| !skipped.contains(c));
            }
        }
        for &r in &chosen {
            urn.push(r);
            if conceptual[r as usize] {
                for _ in 0..extra_balls(&mut rng, params.effect) {
                    urn.push(r);
                }
            }
        }
        urn.push(i as u32);
        if conceptual[i] {
            for _ in 0..extra_balls(&mut rng, params.effect) {
                urn.push(i as u32);
            }
        }
        chosen.sort_unstable();
        references.push(chosen);
    }

    let width = n.to_string().len().max(6);
    let id = |i: u32| format!("S{:0width$}", i, width = width);
    let mut records = Vec::with_capacity(n);
    for (i, refs) in references.into_iter().enumerate() {
        let journal = if rng.random::<f64>() < params.off_list_share {
            OFF_LIST_JOURNAL
        } else {
            JOURNALS.choose(&mut rng).expect("non-empty")
        };
        let abstract_len = rng.random_range(380..1000);
        let title = format!("Synthetic study {}: {}", i, text(&mut rng, 20));
        let n_authors = 1 + rng.random_range(0..3) + rng.random_range(0..4);
        records.push(PaperRecord {
            id: id(i as u32),
            title,
            abstract_text: text(&mut rng, abstract_len),
            journal: journal.to_string(),
            year: years[i],
            n_authors,
            references: refs.into_iter().map(id).collect(),
            gold_label: Some(if conceptual[i] {
                GoldLabel::Conceptual
            } else {
                GoldLabel::Empirical
            }),
        });
    }
    Ok(records)
}

pub fn synth_corpus(params: &SynthParams) -> Result<Corpus, SynthError> {
    Ok(Corpus::from_records(synth_records(params)?)?)
}

/// Writes the corpus as JSONL and, when asked, an allowlist of the on-list
/// journals.
pub fn write_synth_corpus(
    params: &SynthParams,
    corpus_path: &Path,
    allowlist_path: Option<&Path>,
) -> Result<Corpus, SynthError> {
    let corpus = synth_corpus(params)?;
    std::fs::write(corpus_path, corpus.to_jsonl_string())?;
    if let Some(path) = allowlist_path {
        let mut text = JOURNALS.join("\n");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(corpus)
}
