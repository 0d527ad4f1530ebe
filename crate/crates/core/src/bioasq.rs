//! Converter from BioASQ Task B style records to question-snippet-answer
//! triples: one triple per (question, gold snippet) pair in which at least
//! one gold answer string can be located; other pairs are dropped and
//! counted in the output meta.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{locate_answer, Dataset, Provenance, Triple};
use crate::error::{Error, Result};
use crate::text::MatchMode;

/// Top-level BioASQ export: `{"questions": [...]}`.
#[derive(Debug, Deserialize)]
pub struct BioasqCollection {
    pub questions: Vec<BioasqQuestion>,
}

#[derive(Debug, Deserialize)]
pub struct BioasqQuestion {
    pub id: String,
    pub body: String,
    #[serde(rename = "type")]
    pub question_type: String,
    #[serde(default)]
    pub exact_answer: ExactAnswer,
    #[serde(default)]
    pub snippets: Vec<BioasqSnippet>,
}

#[derive(Debug, Deserialize)]
pub struct BioasqSnippet {
    pub text: String,
    #[serde(default)]
    pub document: Option<String>,
}

/// BioASQ answers appear as a bare string, a list of phrasings, or a list of
/// synonym lists; all of them flatten to alternative answer strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExactAnswer {
    One(String),
    Flat(Vec<String>),
    Nested(Vec<Vec<String>>),
}

impl Default for ExactAnswer {
    fn default() -> Self {
        ExactAnswer::Flat(Vec::new())
    }
}

impl ExactAnswer {
    /// Flattened, trimmed, order-preserving deduped answer strings.
    pub fn strings(&self) -> Vec<String> {
        let raw: Vec<&str> = match self {
            ExactAnswer::One(s) => vec![s.as_str()],
            ExactAnswer::Flat(v) => v.iter().map(String::as_str).collect(),
            ExactAnswer::Nested(v) => v.iter().flatten().map(String::as_str).collect(),
        };
        let mut seen = BTreeSet::new();
        raw.iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .filter(|s| seen.insert(s.to_string()))
            .map(str::to_string)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ConvertOptions {
    /// Question types to keep (BioASQ type strings).
    pub keep_types: BTreeSet<String>,
    pub match_mode: MatchMode,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            keep_types: BTreeSet::from(["factoid".to_string()]),
            match_mode: MatchMode::Casefold,
        }
    }
}

/// Convert BioASQ questions to triples. Snippets that do not contain any
/// gold answer string are silently dropped; drop counts land in `meta`.
pub fn convert_bioasq(questions: &[BioasqQuestion], opts: &ConvertOptions) -> Dataset {
    let mut triples = Vec::new();
    let mut questions_kept = 0usize;
    let mut pairs_seen = 0usize;
    let mut pairs_dropped = 0usize;

    for q in questions {
        if !opts.keep_types.contains(&q.question_type) {
            continue;
        }
        let answers = q.exact_answer.strings();
        if answers.is_empty() {
            continue;
        }
        questions_kept += 1;
        for (snippet_idx, snippet) in q.snippets.iter().enumerate() {
            pairs_seen += 1;
            let spans = locate_answer(&snippet.text, &answers, opts.match_mode);
            if spans.is_empty() {
                pairs_dropped += 1;
                continue;
            }
            triples.push(Triple {
                id: format!("{}/s{}", q.id, snippet_idx),
                question: q.body.clone(),
                snippet: snippet.text.clone(),
                answers: answers.clone(),
                spans,
                source_doc: snippet.document.clone(),
                provenance: Provenance::original()
                    .with_param("question_id", &q.id)
                    .with_param("question_type", &q.question_type)
                    .with_param("snippet_index", snippet_idx),
            });
        }
    }

    let mut ds = Dataset::new(triples);
    ds.set_meta("source", "bioasq");
    ds.set_meta("questions_total", questions.len());
    ds.set_meta("questions_kept", questions_kept);
    ds.set_meta("pairs_seen", pairs_seen);
    ds.set_meta("pairs_dropped_no_answer", pairs_dropped);
    ds
}

/// Load a BioASQ JSON file (either `{"questions": [...]}` or a bare array)
/// and convert it.
pub fn convert_bioasq_file(path: impl AsRef<Path>, opts: &ConvertOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let questions = match serde_json::from_str::<BioasqCollection>(&raw) {
        Ok(c) => c.questions,
        Err(_) => serde_json::from_str::<Vec<BioasqQuestion>>(&raw).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?,
    };
    Ok(convert_bioasq(&questions, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question(id: &str, qtype: &str, answers: &[&str], snippets: &[&str]) -> BioasqQuestion {
        BioasqQuestion {
            id: id.into(),
            body: format!("question {}", id),
            question_type: qtype.into(),
            exact_answer: ExactAnswer::Flat(answers.iter().map(|s| s.to_string()).collect()),
            snippets: snippets
                .iter()
                .map(|s| BioasqSnippet {
                    text: s.to_string(),
                    document: Some("pmid:1".into()),
                })
                .collect(),
        }
    }

    #[test]
    fn keeps_only_answer_bearing_snippets() {
        let qs = vec![question(
            "q1",
            "factoid",
            &["NF1"],
            &["The NF1 gene is mutated.", "An unrelated sentence."],
        )];
        let ds = convert_bioasq(&qs, &ConvertOptions::default());
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.triples[0].id, "q1/s0");
        assert_eq!(ds.meta["pairs_dropped_no_answer"], "1");
        ds.validate().unwrap();
    }

    #[test]
    fn type_filter_drops_yesno() {
        let qs = vec![question("q1", "yesno", &["yes"], &["yes it is"])];
        let ds = convert_bioasq(&qs, &ConvertOptions::default());
        assert!(ds.is_empty());
    }

    #[test]
    fn output_count_matches_bruteforce_scan() {
        // Property from the conversion contract: output size equals the
        // number of (question, snippet) pairs where some answer occurs.
        let qs = vec![
            question("q1", "factoid", &["BRCA1", "brca-one"], &[
                "BRCA1 is a tumor suppressor.",
                "No mention here.",
                "Lowercase brca1 still counts.",
            ]),
            question("q2", "factoid", &["mTOR"], &["mTOR signaling.", "mTOR again mTOR."]),
        ];
        let opts = ConvertOptions::default();
        let ds = convert_bioasq(&qs, &opts);
        let brute: usize = qs
            .iter()
            .flat_map(|q| {
                let answers = q.exact_answer.strings();
                q.snippets
                    .iter()
                    .map(move |s| {
                        let hay = s.text.to_lowercase();
                        answers.iter().any(|a| hay.contains(&a.to_lowercase()))
                    })
                    .collect::<Vec<_>>()
            })
            .filter(|hit| *hit)
            .count();
        assert_eq!(ds.len(), brute);
        assert_eq!(ds.len(), 4);
        // Multiple occurrences become multiple spans of one triple.
        let multi = ds.triples.iter().find(|t| t.id == "q2/s1").unwrap();
        assert_eq!(multi.spans.len(), 2);
    }

    #[test]
    fn nested_exact_answer_flattens() {
        let ea: ExactAnswer =
            serde_json::from_str(r#"[["NF1", "neurofibromin 1"], ["NF1"]]"#).unwrap();
        assert_eq!(ea.strings(), vec!["NF1", "neurofibromin 1"]);
    }

    #[test]
    fn triples_share_question_group_key() {
        let qs = vec![question("q7", "factoid", &["x"], &["x here", "x there"])];
        let ds = convert_bioasq(&qs, &ConvertOptions::default());
        assert_eq!(ds.len(), 2);
        assert!(ds.triples.iter().all(|t| t.question_group() == "q7"));
    }
}
