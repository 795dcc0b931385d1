//! Bibliographic records: parsing, validation, journal filtering and the
//! per-record attributes used by the regression stage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use crate::graph::CitationGraph;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("id `{0}` is present in the graph but missing from the corpus")]
    GraphMismatch(String),
    #[error("year {0} is outside 1991..=2020")]
    YearOutOfRange(i32),
    #[error("invalid eligibility criteria: {0}")]
    InvalidCriteria(String),
    #[error("journal allowlist is empty")]
    EmptyAllowlist,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Human or editorial article-type label carried by validation corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldLabel {
    Conceptual,
    Empirical,
}

/// One bibliographic item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub journal: String,
    pub year: i32,
    pub n_authors: u32,
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<GoldLabel>,
}

impl PaperRecord {
    /// Trims the id, drops blank, duplicate and self references, and checks
    /// the field ranges.
    fn normalize(mut self) -> Result<Self, String> {
        self.id = self.id.trim().to_string();
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if !(1800..=2100).contains(&self.year) {
            return Err(format!("year {} outside 1800..=2100", self.year));
        }
        if self.n_authors == 0 {
            return Err("n_authors must be at least 1".into());
        }
        let mut seen = HashSet::with_capacity(self.references.len());
        let id = self.id.clone();
        self.references = std::mem::take(&mut self.references)
            .into_iter()
            .map(|r| r.trim().to_string())
            .filter(|r| !r.is_empty() && *r != id && seen.insert(r.clone()))
            .collect();
        Ok(self)
    }

    /// Abstract length in characters with line endings normalized to a
    /// single character each.
    pub fn abstract_chars(&self) -> usize {
        let text = &self.abstract_text;
        text.chars().count() - text.matches("\r\n").count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub sources: Vec<PathBuf>,
    pub ingested_at: SystemTime,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            ingested_at: SystemTime::now(),
        }
    }
}

/// Records keyed by id. Iteration order is ascending id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: BTreeMap<String, PaperRecord>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a corpus from already constructed records, applying the same
    /// normalization as [`parse_corpus`].
    pub fn from_records<I>(records: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = PaperRecord>,
    {
        let mut corpus = Corpus::new();
        for (i, record) in records.into_iter().enumerate() {
            let record = record.normalize().map_err(|message| CorpusError::Malformed {
                line: i + 1,
                message,
            })?;
            corpus.insert(record)?;
        }
        Ok(corpus)
    }

    fn insert(&mut self, record: PaperRecord) -> Result<(), CorpusError> {
        if self.records.contains_key(&record.id) {
            return Err(CorpusError::DuplicateId(record.id));
        }
        self.records.insert(record.id.clone(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PaperRecord> {
        self.records.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.records.contains_key(id)
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &PaperRecord> + '_ {
        self.records.values()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.records.keys().map(String::as_str)
    }

    /// Paper count per journal, ascending by journal name.
    pub fn journal_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for record in self.records.values() {
            *counts.entry(record.journal.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Writes one JSON object per line in ascending id order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in self.records.values() {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Parses line-delimited JSON records. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_corpus<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PaperRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let record = record.normalize().map_err(|message| CorpusError::Malformed {
            line: line_no,
            message,
        })?;
        corpus.insert(record)?;
    }
    Ok(corpus)
}

pub fn parse_corpus_str(input: &str) -> Result<Corpus, CorpusError> {
    parse_corpus(input.as_bytes())
}

/// Journal allowlist file: one name per line, trimmed, blank lines ignored.
pub fn parse_allowlist(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped: usize,
    /// Dropped paper counts keyed by journal.
    pub dropped_by_journal: BTreeMap<String, usize>,
}

/// Keeps only records whose (trimmed) journal is on the allowlist.
pub fn filter_journals(
    corpus: Corpus,
    allowlist: &BTreeSet<String>,
) -> Result<(Corpus, FilterReport), CorpusError> {
    if allowlist.is_empty() {
        return Err(CorpusError::EmptyAllowlist);
    }
    let mut report = FilterReport::default();
    let Corpus {
        records,
        provenance,
    } = corpus;
    let mut kept = BTreeMap::new();
    for (id, record) in records {
        if allowlist.contains(record.journal.trim()) {
            kept.insert(id, record);
        } else {
            report.dropped += 1;
            *report
                .dropped_by_journal
                .entry(record.journal.clone())
                .or_insert(0) += 1;
        }
    }
    report.kept = kept.len();
    Ok((
        Corpus {
            records: kept,
            provenance,
        },
        report,
    ))
}

/// Five-year publication cohorts. The first is the regression baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum YearGroup {
    G1991_1995,
    G1996_2000,
    G2001_2005,
    G2006_2010,
    G2011_2015,
    G2016_2020,
}

impl YearGroup {
    pub const ALL: [YearGroup; 6] = [
        YearGroup::G1991_1995,
        YearGroup::G1996_2000,
        YearGroup::G2001_2005,
        YearGroup::G2006_2010,
        YearGroup::G2011_2015,
        YearGroup::G2016_2020,
    ];

    pub fn start_year(self) -> i32 {
        1991 + 5 * self as i32
    }

    pub fn end_year(self) -> i32 {
        self.start_year() + 4
    }

    pub fn label(self) -> String {
        format!("{}-{}", self.start_year(), self.end_year())
    }
}

impl fmt::Display for YearGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn year_group(year: i32) -> Result<YearGroup, CorpusError> {
    if !(1991..=2020).contains(&year) {
        return Err(CorpusError::YearOutOfRange(year));
    }
    Ok(YearGroup::ALL[((year - 1991) / 5) as usize])
}

/// Inclusive lower bounds for the regression sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EligibilityCriteria {
    pub min_out_links: usize,
    pub min_in_links: usize,
    pub year_min: i32,
    pub year_max: i32,
    pub min_abstract_chars: usize,
}

impl Default for EligibilityCriteria {
    fn default() -> Self {
        Self {
            min_out_links: 11,
            min_in_links: 11,
            year_min: 1991,
            year_max: 2020,
            min_abstract_chars: 501,
        }
    }
}

impl EligibilityCriteria {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.year_min > self.year_max {
            return Err(CorpusError::InvalidCriteria(format!(
                "year_min {} > year_max {}",
                self.year_min, self.year_max
            )));
        }
        Ok(())
    }

    pub fn admits(&self, record: &PaperRecord, references: usize, citations: usize) -> bool {
        references >= self.min_out_links
            && citations >= self.min_in_links
            && (self.year_min..=self.year_max).contains(&record.year)
            && record.abstract_chars() >= self.min_abstract_chars
    }
}

/// Ids passing every criterion, ascending.
pub fn eligible_ids(
    corpus: &Corpus,
    graph: &CitationGraph,
    criteria: &EligibilityCriteria,
) -> Result<Vec<String>, CorpusError> {
    criteria.validate()?;
    let mut out = Vec::new();
    for (index, id) in graph.ids().iter().enumerate() {
        let record = corpus
            .get(id)
            .ok_or_else(|| CorpusError::GraphMismatch(id.clone()))?;
        let node = index as u32;
        if criteria.admits(record, graph.out_degree(node), graph.in_degree(node)) {
            out.push(id.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(id: &str, refs: &[&str]) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            title: format!("Title {id}"),
            abstract_text: "x".repeat(600),
            journal: "Journal of Marketing".into(),
            year: 2005,
            n_authors: 2,
            references: refs.iter().map(|s| s.to_string()).collect(),
            gold_label: None,
        }
    }

    fn line(r: &PaperRecord) -> String {
        serde_json::to_string(r).unwrap()
    }

    #[test]
    fn empty_input_gives_empty_corpus() {
        let corpus = parse_corpus_str("").unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn self_reference_and_duplicates_are_dropped() {
        let text = line(&record("a", &["a", "b", "b", " c "]));
        let corpus = parse_corpus_str(&text).unwrap();
        assert_eq!(corpus.get("a").unwrap().references, vec!["b", "c"]);
    }

    #[test]
    fn missing_year_names_the_line() {
        let mut text = String::new();
        for id in ["a", "b", "c"] {
            text.push_str(&line(&record(id, &[])));
            text.push('\n');
        }
        let mut bad: serde_json::Value = serde_json::from_str(&line(&record("d", &[]))).unwrap();
        bad.as_object_mut().unwrap().remove("year");
        text.push_str(&bad.to_string());
        match parse_corpus_str(&text) {
            Err(CorpusError::Malformed { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("year"), "{message}");
            }
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let text = format!("{}\n{}\n", line(&record("a", &[])), line(&record("a", &[])));
        match parse_corpus_str(&text) {
            Err(CorpusError::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_and_bad_ranges_are_malformed() {
        let mut v: serde_json::Value = serde_json::from_str(&line(&record("a", &[]))).unwrap();
        v["doi"] = "10.1/x".into();
        assert!(matches!(
            parse_corpus_str(&v.to_string()),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
        let mut r = record("a", &[]);
        r.n_authors = 0;
        assert!(parse_corpus_str(&line(&r)).is_err());
        let mut r = record("a", &[]);
        r.year = 1799;
        assert!(parse_corpus_str(&line(&r)).is_err());
    }

    #[test]
    fn gold_label_is_optional() {
        let mut r = record("a", &[]);
        assert!(!line(&r).contains("gold_label"));
        r.gold_label = Some(GoldLabel::Conceptual);
        assert!(line(&r).contains(r#""gold_label":"conceptual""#));
        let corpus = parse_corpus_str(&line(&r)).unwrap();
        assert_eq!(corpus.get("a").unwrap().gold_label, Some(GoldLabel::Conceptual));
    }

    fn corpus_with_journals(journals: &[&str], per_journal: usize) -> Corpus {
        let mut records = Vec::new();
        for (j, name) in journals.iter().enumerate() {
            for k in 0..per_journal {
                let mut r = record(&format!("p{j}_{k}"), &[]);
                r.journal = name.to_string();
                records.push(r);
            }
        }
        Corpus::from_records(records).unwrap()
    }

    #[test]
    fn filter_keeps_only_allowlisted_journals() {
        let names: Vec<String> = (0..96).map(|j| format!("J{j:02}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let corpus = corpus_with_journals(&refs, 2);
        let allow: BTreeSet<String> = names[..90].iter().cloned().collect();
        let (kept, report) = filter_journals(corpus, &allow).unwrap();
        assert_eq!(kept.len(), 180);
        assert_eq!(report.dropped, 12);
        assert_eq!(report.dropped_by_journal.len(), 6);
        assert!(kept.records().all(|r| allow.contains(&r.journal)));
        assert_eq!(kept.journal_counts().len(), 90);
    }

    #[test]
    fn filter_identity_and_disjoint_cases() {
        let corpus = corpus_with_journals(&["A", "B"], 3);
        let all = parse_allowlist("A\n  B  \n\n");
        let (kept, report) = filter_journals(corpus.clone(), &all).unwrap();
        assert_eq!(kept.to_jsonl_string(), corpus.to_jsonl_string());
        assert_eq!(report.dropped, 0);

        let none = parse_allowlist("C\n");
        let (kept, _) = filter_journals(corpus.clone(), &none).unwrap();
        assert!(kept.is_empty());

        assert!(matches!(
            filter_journals(corpus, &BTreeSet::new()),
            Err(CorpusError::EmptyAllowlist)
        ));
    }

    #[test]
    fn year_groups() {
        assert_eq!(year_group(1991).unwrap(), YearGroup::G1991_1995);
        assert_eq!(year_group(1995).unwrap(), YearGroup::G1991_1995);
        assert_eq!(year_group(1996).unwrap(), YearGroup::G1996_2000);
        assert_eq!(year_group(2020).unwrap(), YearGroup::G2016_2020);
        assert!(year_group(1990).is_err());
        assert!(year_group(2021).is_err());
        for y in 1991..=2020 {
            let g = year_group(y).unwrap();
            assert!(g.start_year() <= y && y <= g.end_year());
            assert_eq!(g.end_year() - g.start_year() + 1, 5);
        }
        assert!(YearGroup::ALL.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(YearGroup::G2016_2020.label(), "2016-2020");
    }

    #[test]
    fn abstract_length_counts_chars_and_folds_crlf() {
        let mut r = record("a", &[]);
        r.abstract_text = "é b\r\nc".into();
        assert_eq!(r.abstract_chars(), 5);
    }
}
