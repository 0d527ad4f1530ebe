//! Cloze-style MRC conversion (BioMRC-style records) and seeded dataset
//! sampling.
//!
//! A cloze record pairs a title with one masked entity and the article
//! abstract. Conversion keeps each abstract sentence that contains the gold
//! answer (or a listed synonym) as the snippet of a new triple; when several
//! sentences qualify, each yields its own triple.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{locate_answer, Dataset, Method, Provenance, Triple};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::sentence::segment_sentences;
use crate::text::MatchMode;

/// Placeholder spellings accepted in incoming cloze questions; emitted
/// questions always use `[MASK]`.
const PLACEHOLDERS: [&str; 2] = ["[MASK]", "XXXX"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClozeRecord {
    pub record_id: String,
    /// Contains exactly one placeholder (`[MASK]` or BioMRC's `XXXX`).
    pub cloze_question: String,
    pub passage: String,
    /// Gold answer plus optional synonym surface forms.
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
}

impl ClozeRecord {
    fn placeholder_count(&self) -> usize {
        PLACEHOLDERS
            .iter()
            .map(|p| self.cloze_question.matches(p).count())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let count = self.placeholder_count();
        if count != 1 {
            return Err(Error::Validation(format!(
                "cloze record {:?} has {} placeholders, expected exactly 1",
                self.record_id, count
            )));
        }
        if self.answers.iter().all(|a| a.trim().is_empty()) {
            return Err(Error::Validation(format!(
                "cloze record {:?} has no answer strings",
                self.record_id
            )));
        }
        Ok(())
    }

    /// The cloze question with its placeholder normalized to `[MASK]`.
    pub fn normalized_question(&self) -> String {
        let mut q = self.cloze_question.clone();
        for p in PLACEHOLDERS {
            q = q.replace(p, "[MASK]");
        }
        q
    }
}

/// One triple per answer-bearing sentence of the passage; empty when no
/// sentence contains an answer.
pub fn convert_cloze(record: &ClozeRecord, match_mode: MatchMode) -> Result<Vec<Triple>> {
    record.validate()?;
    let question = record.normalized_question();
    let answers: Vec<String> = record
        .answers
        .iter()
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();

    let mut triples = Vec::new();
    for sentence in segment_sentences(&record.passage) {
        let spans = locate_answer(&sentence.text, &answers, match_mode);
        if spans.is_empty() {
            continue;
        }
        triples.push(Triple {
            id: Triple::derived_id(&record.record_id, Method::Biomrc, triples.len()),
            question: question.clone(),
            snippet: sentence.text,
            answers: answers.clone(),
            spans,
            source_doc: None,
            provenance: Provenance {
                method: Method::Biomrc,
                parent_id: None,
                params: Default::default(),
            }
            .with_param("record_id", &record.record_id)
            .with_param("sentence_index", sentence.index),
        });
    }
    Ok(triples)
}

/// Convert a JSONL file of cloze records. Records whose placeholder is
/// malformed abort with a validation error; records with no answer-bearing
/// sentence contribute nothing and are counted in `meta`.
pub fn convert_cloze_file(path: impl AsRef<Path>, match_mode: MatchMode) -> Result<Dataset> {
    let records: Vec<ClozeRecord> = jsonl::read_jsonl(path)?;
    convert_cloze_records(&records, match_mode)
}

pub fn convert_cloze_records(records: &[ClozeRecord], match_mode: MatchMode) -> Result<Dataset> {
    let mut triples = Vec::new();
    let mut records_empty = 0usize;
    for record in records {
        let converted = convert_cloze(record, match_mode)?;
        if converted.is_empty() {
            records_empty += 1;
        }
        triples.extend(converted);
    }
    let mut ds = Dataset::new(triples);
    ds.set_meta("source", "biomrc");
    ds.set_meta("records_total", records.len());
    ds.set_meta("records_without_answer", records_empty);
    ds.set_meta("output", ds.len());
    Ok(ds)
}

/// Uniform sample of `n` triples without replacement, preserving the
/// original relative order; deterministic per seed.
pub fn sample_dataset(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > ds.len() {
        return Err(Error::Argument(format!(
            "cannot sample {} triples from a dataset of {}",
            n,
            ds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = ds.len();
    let mut indices: Vec<usize> = (0..len).collect();
    // Partial Fisher-Yates: the first n entries are a uniform n-subset.
    for i in 0..n {
        let j = rng.random_range(i..len);
        indices.swap(i, j);
    }
    let mut chosen: Vec<usize> = indices[..n].to_vec();
    chosen.sort_unstable();
    let mut out = Dataset::new(chosen.into_iter().map(|i| ds.triples[i].clone()).collect());
    out.meta = ds.meta.clone();
    out.set_meta("sampled_n", n);
    out.set_meta("sampled_from", len);
    out.set_meta("sample_seed", seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, question: &str, passage: &str, answers: &[&str]) -> ClozeRecord {
        ClozeRecord {
            record_id: id.into(),
            cloze_question: question.into(),
            passage: passage.into(),
            answers: answers.iter().map(|s| s.to_string()).collect(),
            candidates: None,
        }
    }

    #[test]
    fn one_triple_per_answer_bearing_sentence() {
        let r = record(
            "16061304",
            "Prognosis of resected XXXX in Japan.",
            "Lung cancer is common. Treatment varies by stage. Lung cancer outcomes improved.",
            &["lung cancer"],
        );
        let got = convert_cloze(&r, MatchMode::Casefold).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].snippet, "Lung cancer is common.");
        assert_eq!(got[1].snippet, "Lung cancer outcomes improved.");
        for t in &got {
            assert_eq!(t.question, "Prognosis of resected [MASK] in Japan.");
            t.validate().unwrap();
        }
        // Brute-force count check: sentences containing the answer.
        let brute = segment_sentences(&r.passage)
            .into_iter()
            .filter(|s| s.text.to_lowercase().contains("lung cancer"))
            .count();
        assert_eq!(got.len(), brute);
    }

    #[test]
    fn answer_absent_from_passage_yields_empty() {
        let r = record("r1", "A [MASK] title.", "Nothing relevant. At all.", &["zzz"]);
        assert!(convert_cloze(&r, MatchMode::Casefold).unwrap().is_empty());
    }

    #[test]
    fn synonyms_count_for_sentence_matching() {
        let r = record(
            "r1",
            "The [MASK] study.",
            "The carcinoma was staged. Tumours were resected.",
            &["carcinoma", "tumours"],
        );
        let got = convert_cloze(&r, MatchMode::Casefold).unwrap();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn malformed_placeholder_is_rejected() {
        let none = record("r1", "No placeholder here.", "Text.", &["x"]);
        assert!(convert_cloze(&none, MatchMode::Casefold).is_err());
        let two = record("r2", "[MASK] and XXXX.", "Text.", &["x"]);
        assert!(convert_cloze(&two, MatchMode::Casefold).is_err());
    }

    #[test]
    fn snippets_are_verbatim_sentences() {
        let passage = "Epirubicin reduces ejection fraction. A high risk of CHF follows.";
        let r = record("r1", "Cardiac effects of [MASK] therapy.", passage, &["epirubicin"]);
        let got = convert_cloze(&r, MatchMode::Casefold).unwrap();
        let sentences: Vec<String> = segment_sentences(passage)
            .into_iter()
            .map(|s| s.text)
            .collect();
        for t in &got {
            assert!(sentences.contains(&t.snippet));
        }
    }

    #[test]
    fn file_driver_counts_empty_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloze.jsonl");
        let records = vec![
            record("r1", "A [MASK] one.", "The answer is here.", &["answer"]),
            record("r2", "A [MASK] two.", "Nothing to find.", &["answer"]),
        ];
        jsonl::write_jsonl(&path, &records).unwrap();
        let ds = convert_cloze_file(&path, MatchMode::Casefold).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.meta["records_without_answer"], "1");
    }

    fn toy_dataset(n: usize) -> Dataset {
        let triples = (0..n)
            .map(|i| Triple {
                id: format!("t{}", i),
                question: "q".into(),
                snippet: format!("answer {}", i),
                answers: vec!["answer".into()],
                spans: vec![crate::AnswerSpan::new(0, 6)],
                source_doc: None,
                provenance: Provenance::original(),
            })
            .collect();
        Dataset::new(triples)
    }

    #[test]
    fn sample_full_is_identity() {
        let ds = toy_dataset(5);
        let got = sample_dataset(&ds, 5, 3).unwrap();
        assert_eq!(got, ds);
    }

    #[test]
    fn sample_zero_is_empty_and_oversample_errors() {
        let ds = toy_dataset(5);
        assert!(sample_dataset(&ds, 0, 3).unwrap().is_empty());
        assert!(sample_dataset(&ds, 6, 3).is_err());
    }

    #[test]
    fn sample_is_deterministic_and_order_preserving() {
        let ds = toy_dataset(20);
        let a = sample_dataset(&ds, 7, 42).unwrap();
        let b = sample_dataset(&ds, 7, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        // Relative order preserved: ids must be increasing by index.
        let positions: Vec<usize> = a
            .triples
            .iter()
            .map(|t| t.id[1..].parse::<usize>().unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let c = sample_dataset(&ds, 7, 43).unwrap();
        assert_ne!(a, c, "different seeds draw different samples");
    }
}
