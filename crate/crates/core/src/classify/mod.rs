//! Conceptual/empirical article classification through a chat-completion
//! backend, with a response cache and gold-label agreement scoring.

mod backend;
mod cache;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{GoldLabel, PaperRecord};

pub use backend::{
    BackendConfig, BackendError, ChatBackend, ChatRequest, HttpBackend, RetryPolicy, StubBackend,
};
pub use cache::{cache_key, CacheEntry, ResponseCache};

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("cannot render prompt: {0} is empty")]
    EmptyPromptField(&'static str),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("API key environment variable `{0}` is not set")]
    MissingApiKey(String),
    #[error("backend failed for `{id}`: {source}")]
    Backend {
        id: String,
        #[source]
        source: BackendError,
    },
    #[error("no classification for gold-labeled record `{0}`")]
    MissingClassification(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Conceptual,
    Empirical,
    Other,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Conceptual => "conceptual",
            Label::Empirical => "empirical",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conceptual" => Ok(Label::Conceptual),
            "empirical" => Ok(Label::Empirical),
            "other" => Ok(Label::Other),
            _ => Err(ClassifyError::UnknownLabel(s.to_string())),
        }
    }
}

impl From<GoldLabel> for Label {
    fn from(g: GoldLabel) -> Self {
        match g {
            GoldLabel::Conceptual => Label::Conceptual,
            GoldLabel::Empirical => Label::Empirical,
        }
    }
}

/// Where a classification came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Backend,
    Cache,
    Stub,
    /// Copied from the record's gold label instead of asking a backend.
    Gold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub paper_id: String,
    pub label: Label,
    pub rationale: String,
    pub source: Source,
}

const PROMPT_PREAMBLE: &str = "There are two types of articles published in the Journal of Marketing as below.

1. Conceptual articles: These types of articles make their contributions through theoretical arguments that introduce new topics, new constructs, new relationships, new theories, and even new paradigms for the field.

2. Empirical articles: Empirical articles use organized observations about marketing-relevant data of any type to offer important insights to the marketing discipline.

";

const PROMPT_FORMAT: &str =
    "Your response will be in a format \"This article is in the [Category] because [Reasons]\".";

/// Renders the classification query. Title and abstract are inserted as-is,
/// without escaping.
pub fn render_prompt(title: &str, abstract_text: &str) -> Result<String, ClassifyError> {
    if title.trim().is_empty() {
        return Err(ClassifyError::EmptyPromptField("title"));
    }
    if abstract_text.trim().is_empty() {
        return Err(ClassifyError::EmptyPromptField("abstract"));
    }
    let mut prompt = String::with_capacity(
        PROMPT_PREAMBLE.len() + PROMPT_FORMAT.len() + title.len() + abstract_text.len() + 160,
    );
    prompt.push_str(PROMPT_PREAMBLE);
    prompt.push_str("Based on the definitions above, classify an academic article with title \"");
    prompt.push_str(title);
    prompt.push_str("\" and abstract \"");
    prompt.push_str(abstract_text);
    prompt.push_str("\" into either the conceptual category or the empirical category.\n\n");
    prompt.push_str(PROMPT_FORMAT);
    Ok(prompt)
}

fn template_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?is)^\s*this\s+article\s+is\s+in\s+the\s+(.*?)\s+because\s+(.*?)\s*$")
            .expect("static regex")
    })
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(conceptual|empirical)\b").expect("static regex"))
}

/// The single category named in `text`, or `None` when it names neither or
/// both.
fn sole_category(text: &str) -> Option<Label> {
    let mut conceptual = false;
    let mut empirical = false;
    for m in token_regex().find_iter(text) {
        if m.as_str().eq_ignore_ascii_case("conceptual") {
            conceptual = true;
        } else {
            empirical = true;
        }
    }
    match (conceptual, empirical) {
        (true, false) => Some(Label::Conceptual),
        (false, true) => Some(Label::Empirical),
        _ => None,
    }
}

/// Maps a free-text response to a label and rationale.
///
/// A response following `This article is in the <category> because
/// <reasons>` yields the reasons as rationale. Anything else falls back to a
/// token scan of the whole text; naming neither or both categories is
/// `Other`.
pub fn parse_response(text: &str) -> (Label, String) {
    if let Some(caps) = template_regex().captures(text) {
        if let Some(label) = sole_category(&caps[1]) {
            return (label, caps[2].to_string());
        }
    }
    let label = sole_category(text).unwrap_or(Label::Other);
    (label, text.trim().to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchStats {
    pub backend_calls: usize,
    pub cache_hits: usize,
    pub failures: usize,
}

#[derive(Debug)]
pub struct BatchOutput {
    /// One entry per input record, in input order.
    pub entries: Vec<Result<Classification, ClassifyError>>,
    pub stats: BatchStats,
}

/// Classifies records with bounded concurrency. Cache hits skip the
/// backend; every fresh response is appended to the cache. Failures are
/// reported per record and do not stop the batch.
pub fn classify_batch(
    records: &[PaperRecord],
    backend: &dyn ChatBackend,
    config: &BackendConfig,
    cache: Option<&ResponseCache>,
) -> Result<BatchOutput, ClassifyError> {
    config.validate()?;
    let hits = AtomicUsize::new(0);
    let calls = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let source = if backend.is_network() {
        Source::Backend
    } else {
        Source::Stub
    };

    let classify_one = |record: &PaperRecord| -> Result<Classification, ClassifyError> {
        let prompt = render_prompt(&record.title, &record.abstract_text)?;
        let key = cache_key(&config.model, &prompt);
        if let Some(entry) = cache.and_then(|c| c.get(&key)) {
            hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Classification {
                paper_id: record.id.clone(),
                label: entry.label,
                rationale: entry.rationale,
                source: Source::Cache,
            });
        }
        let request = ChatRequest {
            model: config.model.clone(),
            temperature: config.temperature,
            prompt,
        };
        calls.fetch_add(1, Ordering::Relaxed);
        let text = backend::complete_with_retry(backend, &request, &config.retry).map_err(
            |source| ClassifyError::Backend {
                id: record.id.clone(),
                source,
            },
        )?;
        let (label, rationale) = parse_response(&text);
        if let Some(cache) = cache {
            cache
                .insert(CacheEntry::new(key, &config.model, label, &rationale))
                .map_err(|e| ClassifyError::Cache(e.to_string()))?;
        }
        Ok(Classification {
            paper_id: record.id.clone(),
            label,
            rationale,
            source,
        })
    };

    let workers = config.max_in_flight.min(records.len()).max(1);
    let mut slots: Vec<Option<Result<Classification, ClassifyError>>> =
        (0..records.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= records.len() {
                            break;
                        }
                        done.push((i, classify_one(&records[i])));
                    }
                    done
                })
            })
            .collect();
        for handle in handles {
            for (i, result) in handle.join().expect("classifier worker panicked") {
                slots[i] = Some(result);
            }
        }
    });

    let entries: Vec<_> = slots
        .into_iter()
        .map(|s| s.expect("every index is claimed by exactly one worker"))
        .collect();
    let failures = entries.iter().filter(|e| e.is_err()).count();
    Ok(BatchOutput {
        entries,
        stats: BatchStats {
            backend_calls: calls.into_inner(),
            cache_hits: hits.into_inner(),
            failures,
        },
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelAgreement {
    pub gold: usize,
    pub correct: usize,
}

impl LabelAgreement {
    pub fn accuracy(&self) -> f64 {
        if self.gold == 0 {
            return 0.0;
        }
        self.correct as f64 / self.gold as f64
    }

    /// Percentage rounded half away from zero to one decimal, e.g. `92.9%`.
    pub fn percent_display(&self) -> String {
        percent_display(self.correct, self.gold)
    }
}

/// Exact integer rounding of `100 * correct / gold` to one decimal.
pub fn percent_display(correct: usize, gold: usize) -> String {
    if gold == 0 {
        return "n/a".to_string();
    }
    let (c, g) = (correct as u128, gold as u128);
    let tenths = (2000 * c + g) / (2 * g);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgreementReport {
    pub per_label: BTreeMap<GoldLabel, LabelAgreement>,
}

impl AgreementReport {
    pub fn overall(&self) -> LabelAgreement {
        self.per_label
            .values()
            .fold(LabelAgreement::default(), |acc, a| LabelAgreement {
                gold: acc.gold + a.gold,
                correct: acc.correct + a.correct,
            })
    }

    pub fn render(&self) -> String {
        let mut out = String::from("label\tgold\tcorrect\taccuracy\n");
        for (label, a) in &self.per_label {
            let name = Label::from(*label);
            out.push_str(&format!(
                "{name}\t{}\t{}\t{}\n",
                a.gold,
                a.correct,
                a.percent_display()
            ));
        }
        let o = self.overall();
        out.push_str(&format!(
            "overall\t{}\t{}\t{}\n",
            o.gold,
            o.correct,
            o.percent_display()
        ));
        out
    }
}

/// Scores classifications against every gold-labeled record. Records
/// without a gold label are ignored.
pub fn agreement_report(
    classifications: &[Classification],
    records: &[PaperRecord],
) -> Result<AgreementReport, ClassifyError> {
    let by_id: BTreeMap<&str, Label> = classifications
        .iter()
        .map(|c| (c.paper_id.as_str(), c.label))
        .collect();
    let mut report = AgreementReport::default();
    for record in records {
        let Some(gold) = record.gold_label else {
            continue;
        };
        let predicted = by_id
            .get(record.id.as_str())
            .ok_or_else(|| ClassifyError::MissingClassification(record.id.clone()))?;
        let entry = report.per_label.entry(gold).or_default();
        entry.gold += 1;
        if *predicted == Label::from(gold) {
            entry.correct += 1;
        }
    }
    Ok(report)
}
