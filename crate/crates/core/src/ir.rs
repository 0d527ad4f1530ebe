//! Retrieval-based augmentation: use each question as a BM25 query and
//! harvest answer-bearing sentences from the retrieved documents.

use std::collections::HashSet;

use crate::corpus::CorpusStore;
use crate::dataset::{locate_answer, Dataset, Method, Provenance, Triple};
use crate::error::Result;
use crate::text::MatchMode;

#[derive(Debug, Clone)]
pub struct IrConfig {
    pub top_k: usize,
    pub match_mode: MatchMode,
}

impl Default for IrConfig {
    fn default() -> Self {
        IrConfig {
            top_k: 500,
            match_mode: MatchMode::Casefold,
        }
    }
}

/// For each unique question: retrieve `top_k` documents, segment them, and
/// emit one new triple per sentence that contains a full gold answer string.
/// Sentences equal to one of the question's gold snippets are dropped, and
/// (question, sentence) pairs are deduplicated across documents. Output
/// order is (question first occurrence, document rank, sentence index).
pub fn augment_ir(dataset: &Dataset, store: &CorpusStore, config: &IrConfig) -> Result<Dataset> {
    // Group triples by question text, first-occurrence order.
    struct Group<'a> {
        question: &'a str,
        parent_id: &'a str,
        answers: Vec<String>,
        gold_snippets: HashSet<&'a str>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for t in &dataset.triples {
        match groups.iter_mut().find(|g| g.question == t.question) {
            Some(group) => {
                for a in &t.answers {
                    if !group.answers.contains(a) {
                        group.answers.push(a.clone());
                    }
                }
                group.gold_snippets.insert(&t.snippet);
            }
            None => groups.push(Group {
                question: &t.question,
                parent_id: &t.id,
                answers: t.answers.clone(),
                gold_snippets: HashSet::from([t.snippet.as_str()]),
            }),
        }
    }

    let mut triples = Vec::new();
    let mut generated = 0u64;
    let mut deduped = 0u64;
    let mut gold_dropped = 0u64;
    for group in &groups {
        let hits = store.search(group.question, config.top_k)?;
        let mut seen_sentences: HashSet<String> = HashSet::new();
        let mut ordinal = 0usize;
        for (rank, (doc_id, _score)) in hits.iter().enumerate() {
            let sentences = store.get_sentences(doc_id)?;
            for sentence in sentences.iter() {
                let spans = locate_answer(&sentence.text, &group.answers, config.match_mode);
                if spans.is_empty() {
                    continue;
                }
                generated += 1;
                if group.gold_snippets.contains(sentence.text.as_str()) {
                    gold_dropped += 1;
                    continue;
                }
                if !seen_sentences.insert(sentence.text.clone()) {
                    deduped += 1;
                    continue;
                }
                triples.push(Triple {
                    id: Triple::derived_id(group.parent_id, Method::Ir, ordinal),
                    question: group.question.to_string(),
                    snippet: sentence.text.clone(),
                    answers: group.answers.clone(),
                    spans,
                    source_doc: Some(doc_id.clone()),
                    provenance: Provenance::derived(Method::Ir, group.parent_id)
                        .with_param("doc_id", doc_id)
                        .with_param("rank", rank + 1)
                        .with_param("sentence_index", sentence.index),
                });
                ordinal += 1;
            }
        }
    }
    let output = triples.len();

    let mut out = Dataset::new(triples);
    out.set_meta("strategy", "ir");
    out.set_meta("input", dataset.len());
    out.set_meta("questions", groups.len());
    out.set_meta("generated", generated);
    out.set_meta("deduped", deduped);
    out.set_meta("filtered", gold_dropped);
    out.set_meta("output", output);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusDocument;
    use crate::sentence::segment_sentences;

    fn triple(id: &str, question: &str, snippet: &str, answer: &str) -> Triple {
        Triple {
            id: id.into(),
            question: question.into(),
            snippet: snippet.into(),
            answers: vec![answer.into()],
            spans: locate_answer(snippet, &[answer.to_string()], MatchMode::Casefold),
            source_doc: None,
            provenance: Provenance::original(),
        }
    }

    fn store() -> CorpusStore {
        let mut store = CorpusStore::in_memory();
        store
            .ingest(vec![
                CorpusDocument::new(
                    "pm1",
                    "Yeast biology.",
                    "The cell cycle is studied. Nothing relevant here.",
                ),
                CorpusDocument::new(
                    "pm2",
                    "Rett syndrome genetics.",
                    "Unrelated opening line. Mutations in MECP2 cause Rett syndrome. Final line.",
                ),
                CorpusDocument::new(
                    "pm3",
                    "MECP2 overview.",
                    "MECP2 is X-linked. It binds methylated DNA.",
                ),
            ])
            .unwrap();
        store.build_index().unwrap();
        store
    }

    /// Brute-force oracle: scan every sentence of every document for the
    /// answer, ignoring retrieval entirely.
    fn all_answer_bearing_sentences(store: &CorpusStore, answer: &str) -> Vec<String> {
        let mut found = Vec::new();
        for doc in store.documents() {
            for s in segment_sentences(&doc.body()) {
                if s.text.to_lowercase().contains(&answer.to_lowercase()) {
                    found.push(s.text);
                }
            }
        }
        found
    }

    #[test]
    fn no_answer_bearing_sentence_yields_nothing() {
        let ds = Dataset::new(vec![triple(
            "t1",
            "Which cycle is studied in yeast?",
            "Some gold snippet about the cycle.",
            "meiosis",
        )]);
        let out = augment_ir(&ds, &store(), &IrConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn emits_exactly_the_answer_bearing_sentences() {
        let store = store();
        let ds = Dataset::new(vec![triple(
            "t1",
            "Which gene is mutated in Rett syndrome?",
            "Rett syndrome is caused by MECP2 mutations.",
            "MECP2",
        )]);
        let out = augment_ir(&ds, &store, &IrConfig::default()).unwrap();
        out.validate().unwrap();
        let got: HashSet<&str> = out.triples.iter().map(|t| t.snippet.as_str()).collect();
        let brute = all_answer_bearing_sentences(&store, "MECP2");
        let want: HashSet<&str> = brute.iter().map(String::as_str).collect();
        assert_eq!(got, want);
        assert_eq!(out.len(), 3);
        for t in &out.triples {
            // Snippet is a verbatim store sentence of the recorded doc.
            let doc_id = t.source_doc.as_deref().unwrap();
            let idx: usize = t.provenance.params["sentence_index"].parse().unwrap();
            let sentences = store.get_sentences(doc_id).unwrap();
            assert_eq!(sentences[idx].text, t.snippet);
            // Span invariant.
            for span in &t.spans {
                assert_eq!(t.span_text(*span).unwrap().to_lowercase(), "mecp2");
            }
        }
    }

    #[test]
    fn gold_snippet_sentences_are_dropped() {
        let store = store();
        let ds = Dataset::new(vec![triple(
            "t1",
            "Which gene is mutated in Rett syndrome?",
            "Mutations in MECP2 cause Rett syndrome.",
            "MECP2",
        )]);
        let out = augment_ir(&ds, &store, &IrConfig::default()).unwrap();
        assert!(out
            .triples
            .iter()
            .all(|t| t.snippet != "Mutations in MECP2 cause Rett syndrome."));
        assert_eq!(out.meta["filtered"], "1");
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn top_k_limits_retrieval() {
        let store = store();
        let ds = Dataset::new(vec![triple(
            "t1",
            "Which gene is mutated in Rett syndrome?",
            "gold",
            "MECP2",
        )]);
        let cfg = IrConfig {
            top_k: 1,
            ..IrConfig::default()
        };
        let out = augment_ir(&ds, &store, &cfg).unwrap();
        let docs: HashSet<&str> = out
            .triples
            .iter()
            .map(|t| t.source_doc.as_deref().unwrap())
            .collect();
        assert_eq!(docs.len(), 1);
    }

    #[test]
    fn duplicate_questions_processed_once() {
        let store = store();
        let ds = Dataset::new(vec![
            triple("t1", "Which gene is mutated in Rett syndrome?", "g1", "MECP2"),
            triple("t2", "Which gene is mutated in Rett syndrome?", "g2", "MECP2"),
        ]);
        let out = augment_ir(&ds, &store, &IrConfig::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out
            .triples
            .iter()
            .all(|t| t.provenance.parent_id.as_deref() == Some("t1")));
    }

    #[test]
    fn deterministic() {
        let store = store();
        let ds = Dataset::new(vec![triple(
            "t1",
            "Which gene is mutated in Rett syndrome?",
            "g",
            "MECP2",
        )]);
        let a = augment_ir(&ds, &store, &IrConfig::default()).unwrap();
        let b = augment_ir(&ds, &store, &IrConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
