//! Deterministic in-process provider stubs.

use std::collections::HashMap;
use std::path::Path;

use super::{
    validate_single_mask, validate_snippet, FillMask, GatewayError, GatewayResult,
    GenerateQuestions, GeneratedQa, MaskSuggestion, Translate,
};
use crate::dataset::AnswerSpan;
use crate::sentence::segment_sentences;
use crate::text::{slice_chars, word_tokens};

/// Returns the input unchanged; every back-translation round trip is then
/// identical to its source and deduplicated away.
pub struct IdentityTranslate;

impl Translate for IdentityTranslate {
    fn translate(&self, text: &str, _source: &str, _target: &str) -> GatewayResult<String> {
        Ok(text.to_string())
    }
}

/// Tags text with one marker token per translation leg, e.g.
/// `"NF1 gene" -> "NF1 gene ⟦en>fr⟧"`. The original text survives verbatim
/// as a prefix, so answer strings stay locatable, and [`strip_markers`]
/// recovers it exactly. A full round trip therefore produces a distinct but
/// answer-preserving paraphrase stand-in.
pub struct MarkerTranslate;

impl MarkerTranslate {
    fn tag(source: &str, target: &str) -> String {
        format!("\u{27e6}{}>{}\u{27e7}", source, target)
    }
}

impl Translate for MarkerTranslate {
    fn translate(&self, text: &str, source: &str, target: &str) -> GatewayResult<String> {
        Ok(format!("{} {}", text, Self::tag(source, target)))
    }
}

/// Remove every marker token added by [`MarkerTranslate`].
pub fn strip_markers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    let mut pending_space = false;
    for c in text.chars() {
        match c {
            '\u{27e6}' => {
                depth += 1;
                pending_space = false;
            }
            '\u{27e7}' if depth > 0 => depth -= 1,
            ' ' if depth == 0 => pending_space = true,
            _ if depth == 0 => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(c);
            }
            _ => {}
        }
    }
    out
}

/// Dictionary-backed fill-mask stub: maps the exact masked text to a fixed
/// suggestion list. Unknown contexts yield no suggestions.
pub struct StubFillMask {
    table: HashMap<String, Vec<MaskSuggestion>>,
}

impl StubFillMask {
    pub fn new(table: HashMap<String, Vec<MaskSuggestion>>) -> Self {
        StubFillMask { table }
    }

    pub fn empty() -> Self {
        StubFillMask {
            table: HashMap::new(),
        }
    }

    /// Load a fixture: a JSON object mapping masked text to
    /// `[[word, probability], ...]` pairs.
    pub fn from_fixture(path: impl AsRef<Path>) -> GatewayResult<Self> {
        let raw = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GatewayError::Cache(e.to_string()))?;
        Self::from_fixture_str(&raw)
    }

    pub fn from_fixture_str(raw: &str) -> GatewayResult<Self> {
        let parsed: HashMap<String, Vec<(String, f64)>> =
            serde_json::from_str(raw).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        let table = parsed
            .into_iter()
            .map(|(context, pairs)| {
                let suggestions = pairs
                    .into_iter()
                    .map(|(word, probability)| MaskSuggestion { word, probability })
                    .collect();
                (context, suggestions)
            })
            .collect();
        Ok(StubFillMask { table })
    }
}

impl FillMask for StubFillMask {
    fn fill_mask(&self, text_with_mask: &str) -> GatewayResult<Vec<MaskSuggestion>> {
        validate_single_mask(text_with_mask)?;
        let mut suggestions = self.table.get(text_with_mask).cloned().unwrap_or_default();
        suggestions.sort_by(|a, b| {
            b.probability
                .partial_cmp(&a.probability)
                .expect("finite probabilities")
                .then_with(|| a.word.cmp(&b.word))
        });
        Ok(suggestions)
    }
}

/// Rule-based question generation stub: for each sentence of the snippet,
/// emit ("What is mentioned?", first capitalized token run). Spans index the
/// snippet and are valid by construction.
pub struct RuleQgen;

pub const RULE_QGEN_QUESTION: &str = "What is mentioned?";

impl GenerateQuestions for RuleQgen {
    fn generate_questions(
        &self,
        snippet: &str,
        max_items: usize,
    ) -> GatewayResult<Vec<GeneratedQa>> {
        validate_snippet(snippet)?;
        let mut items = Vec::new();
        for sentence in segment_sentences(snippet) {
            let tokens = word_tokens(&sentence.text);
            let is_capitalized = |span: &crate::text::TokenSpan| {
                slice_chars(&sentence.text, span.start, span.end)
                    .and_then(|t| t.chars().next())
                    .is_some_and(char::is_uppercase)
            };
            let Some(first) = tokens.iter().position(is_capitalized) else {
                continue;
            };
            let mut last = first;
            while last + 1 < tokens.len() && is_capitalized(&tokens[last + 1]) {
                last += 1;
            }
            let start = sentence.start + tokens[first].start;
            let end = sentence.start + tokens[last].end;
            let answer = slice_chars(snippet, start, end)
                .expect("token offsets lie inside the snippet")
                .to_string();
            items.push(GeneratedQa {
                question: RULE_QGEN_QUESTION.to_string(),
                answer,
                span: AnswerSpan::new(start, end),
            });
            if items.len() == max_items {
                break;
            }
        }
        Ok(items)
    }
}
