//! The triple data model and on-disk dataset format.
//!
//! A dataset is a JSON-lines file with one triple per line. Spans are
//! `[start, end)` char offsets into the snippet; a triple may carry several
//! non-contiguous spans, one per occurrence of a gold answer string.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::text::{self, MatchMode};

/// Char-offset answer span: `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct AnswerSpan {
    pub start: usize,
    pub end: usize,
}

impl AnswerSpan {
    pub fn new(start: usize, end: usize) -> Self {
        AnswerSpan { start, end }
    }

    pub fn shifted(self, delta: usize) -> Self {
        AnswerSpan {
            start: self.start + delta,
            end: self.end + delta,
        }
    }
}

impl From<(usize, usize)> for AnswerSpan {
    fn from((start, end): (usize, usize)) -> Self {
        AnswerSpan { start, end }
    }
}

impl From<AnswerSpan> for (usize, usize) {
    fn from(s: AnswerSpan) -> Self {
        (s.start, s.end)
    }
}

/// How a triple came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Original,
    Biomrc,
    Backtranslation,
    Ir,
    W2vSubst,
    MlmSubst,
    Qgen,
    Context,
    Other,
}

impl Method {
    /// The wire name, also used in derived triple ids.
    pub fn name(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Biomrc => "biomrc",
            Method::Backtranslation => "backtranslation",
            Method::Ir => "ir",
            Method::W2vSubst => "w2v_subst",
            Method::MlmSubst => "mlm_subst",
            Method::Qgen => "qgen",
            Method::Context => "context",
            Method::Other => "other",
        }
    }
}

/// Lineage of a triple: how it was produced, from what, with what parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    pub parent_id: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Provenance {
    pub fn original() -> Self {
        Provenance {
            method: Method::Original,
            parent_id: None,
            params: BTreeMap::new(),
        }
    }

    pub fn derived(method: Method, parent_id: impl Into<String>) -> Self {
        Provenance {
            method,
            parent_id: Some(parent_id.into()),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// One training/evaluation instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub id: String,
    pub question: String,
    pub snippet: String,
    pub answers: Vec<String>,
    pub spans: Vec<AnswerSpan>,
    pub source_doc: Option<String>,
    pub provenance: Provenance,
}

impl Triple {
    /// Structural validation: span bounds and ordering, and the
    /// original-has-no-parent rule.
    pub fn validate(&self) -> Result<()> {
        let snippet_len = text::char_len(&self.snippet);
        for span in &self.spans {
            if span.start >= span.end || span.end > snippet_len {
                return Err(Error::InvalidTriple {
                    id: self.id.clone(),
                    message: format!(
                        "span ({}, {}) outside snippet of length {}",
                        span.start, span.end, snippet_len
                    ),
                });
            }
        }
        if self.provenance.method == Method::Original && self.provenance.parent_id.is_some() {
            return Err(Error::InvalidTriple {
                id: self.id.clone(),
                message: "original triple must not have a parent".into(),
            });
        }
        Ok(())
    }

    /// The key under which [`split_dataset`] groups triples: the originating
    /// question id when the converter recorded one, else the question text.
    pub fn question_group(&self) -> &str {
        self.provenance
            .params
            .get("question_id")
            .map(String::as_str)
            .unwrap_or(&self.question)
    }

    /// The snippet text selected by `span`.
    pub fn span_text(&self, span: AnswerSpan) -> Option<&str> {
        text::slice_chars(&self.snippet, span.start, span.end)
    }

    /// Derived id for an artificial triple: `parent/method/ordinal`.
    pub fn derived_id(parent: &str, method: Method, ordinal: usize) -> String {
        format!("{}/{}/{}", parent, method.name(), ordinal)
    }
}

/// An ordered collection of triples plus free-form run metadata.
///
/// `meta` carries converter/augmenter counters for the run manifest; it is
/// not part of the on-disk record format and is excluded from equality so
/// the parse/write round-trip law holds for every dataset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub triples: Vec<Triple>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Dataset {
    pub fn new(triples: Vec<Triple>) -> Self {
        Dataset {
            triples,
            meta: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    /// Validate every triple and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.triples.len());
        for triple in &self.triples {
            triple.validate()?;
            if !seen.insert(triple.id.as_str()) {
                return Err(Error::Duplicate {
                    what: "triple id",
                    key: triple.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Triple counts by provenance method, in method order.
    pub fn counts_by_method(&self) -> BTreeMap<Method, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.triples {
            *counts.entry(t.provenance.method).or_insert(0) += 1;
        }
        counts
    }
}

/// Supported dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Jsonl,
}

/// Parse a dataset file, preserving record order. Every triple is validated;
/// errors name the offending line or triple id.
pub fn parse_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let DatasetFormat::Jsonl = format;
    let triples: Vec<Triple> = jsonl::read_jsonl(&path)?;
    let ds = Dataset::new(triples);
    ds.validate()?;
    Ok(ds)
}

/// Write a dataset as JSON-lines: one record per line, stable field order,
/// LF endings. `meta` is not persisted.
pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    jsonl::write_jsonl(path, &ds.triples)
}

/// All non-overlapping, leftmost-greedy occurrences of any answer string in
/// the snippet, sorted by start. Casefold mode matches after Unicode
/// lowercasing but spans index the original snippet. An empty result means
/// "not found".
pub fn locate_answer(snippet: &str, answers: &[String], mode: MatchMode) -> Vec<AnswerSpan> {
    text::find_all(snippet, answers, mode)
        .into_iter()
        .map(|(start, end)| AnswerSpan { start, end })
        .collect()
}

/// Partition a dataset into train/dev/test by question group, so no question
/// contributes triples to more than one split. Group order is shuffled with
/// the seed; split sizes follow the fractions by largest remainder.
pub fn split_dataset(
    ds: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (ft, fd, fe) = fractions;
    if ft <= 0.0 || fd <= 0.0 || fe <= 0.0 {
        return Err(Error::Argument("split fractions must be positive".into()));
    }
    if (ft + fd + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "split fractions must sum to 1, got {}",
            ft + fd + fe
        )));
    }

    // Question groups in first-appearance order.
    let mut group_order: Vec<&str> = Vec::new();
    let mut group_members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in ds.triples.iter().enumerate() {
        let key = t.question_group();
        group_members
            .entry(key)
            .or_insert_with(|| {
                group_order.push(key);
                Vec::new()
            })
            .push(i);
    }
    let n_groups = group_order.len();
    if n_groups < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 question groups to split, found {}",
            n_groups
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = group_order.clone();
    shuffled.shuffle(&mut rng);

    let counts = apportion(n_groups, [ft, fd, fe]);
    let mut splits: Vec<Vec<usize>> = Vec::with_capacity(3);
    let mut cursor = 0;
    for count in counts {
        let mut indices: Vec<usize> = shuffled[cursor..cursor + count]
            .iter()
            .flat_map(|key| group_members[key].iter().copied())
            .collect();
        indices.sort_unstable();
        splits.push(indices);
        cursor += count;
    }

    let names = ["train", "dev", "test"];
    let mut out: Vec<Dataset> = splits
        .into_iter()
        .zip(names)
        .map(|(indices, name)| {
            let mut split = Dataset::new(
                indices
                    .into_iter()
                    .map(|i| ds.triples[i].clone())
                    .collect(),
            );
            split.set_meta("split", name);
            split.set_meta("seed", seed);
            split
        })
        .collect();
    let test = out.pop().expect("three splits");
    let dev = out.pop().expect("three splits");
    let train = out.pop().expect("three splits");
    Ok((train, dev, test))
}

/// Largest-remainder apportionment of `total` items across fractions.
fn apportion(total: usize, fractions: [f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in 0..total.saturating_sub(assigned) {
        counts[order[k % 3]] += 1;
    }
    [counts[0], counts[1], counts[2]]
}
