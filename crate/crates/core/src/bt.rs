//! Back-translation augmentation: paraphrase the question or the snippet by
//! translating to a pivot language and back. Results identical to the
//! original are discarded; snippet paraphrases that lose the answer string
//! are dropped.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{locate_answer, Dataset, Method, Provenance, Triple};
use crate::error::{Error, Result};
use crate::gateway::{GatewayError, Translate};
use crate::text::{normalize_ws, MatchMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BtTarget {
    Question,
    Snippet,
}

impl BtTarget {
    fn name(self) -> &'static str {
        match self {
            BtTarget::Question => "question",
            BtTarget::Snippet => "snippet",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BtConfig {
    /// Pivot languages, ISO 639-1, in application order.
    pub pivots: Vec<String>,
    pub targets: BTreeSet<BtTarget>,
    pub answer_match: MatchMode,
}

impl Default for BtConfig {
    fn default() -> Self {
        BtConfig {
            pivots: vec!["fr".to_string()],
            targets: BTreeSet::from([BtTarget::Question, BtTarget::Snippet]),
            answer_match: MatchMode::Casefold,
        }
    }
}

enum RoundTrip {
    Kept(Triple),
    Identical,
    AnswerLost,
}

fn round_trip(
    triple: &Triple,
    pivot: &str,
    target: BtTarget,
    answer_match: MatchMode,
    translator: &dyn Translate,
) -> std::result::Result<RoundTrip, GatewayError> {
    let text = match target {
        BtTarget::Question => &triple.question,
        BtTarget::Snippet => &triple.snippet,
    };
    let pivoted = translator.translate(text, "en", pivot)?;
    let back = translator.translate(&pivoted, pivot, "en")?;

    let (question, snippet, spans) = match target {
        BtTarget::Question => (back, triple.snippet.clone(), triple.spans.clone()),
        BtTarget::Snippet => {
            let spans = locate_answer(&back, &triple.answers, answer_match);
            if spans.is_empty() {
                return Ok(RoundTrip::AnswerLost);
            }
            (triple.question.clone(), back, spans)
        }
    };
    if question == triple.question && snippet == triple.snippet && spans == triple.spans {
        return Ok(RoundTrip::Identical);
    }
    Ok(RoundTrip::Kept(Triple {
        id: Triple::derived_id(&triple.id, Method::Backtranslation, 0),
        question,
        snippet,
        answers: triple.answers.clone(),
        spans,
        source_doc: triple.source_doc.clone(),
        provenance: Provenance::derived(Method::Backtranslation, &triple.id)
            .with_param("pivot", pivot)
            .with_param("target", target.name()),
    }))
}

/// Round-trip one field of a triple through a pivot language. Returns `None`
/// when the result is identical to the original or, for snippet targets,
/// when no answer string survives relocation. The returned triple carries
/// ordinal 0; [`augment_bt`] assigns sequential per-parent ordinals.
pub fn backtranslate_triple(
    triple: &Triple,
    pivot: &str,
    target: BtTarget,
    answer_match: MatchMode,
    translator: &dyn Translate,
) -> std::result::Result<Option<Triple>, GatewayError> {
    Ok(
        match round_trip(triple, pivot, target, answer_match, translator)? {
            RoundTrip::Kept(t) => Some(t),
            RoundTrip::Identical | RoundTrip::AnswerLost => None,
        },
    )
}

/// Back-translate every (triple, pivot, target) combination, dropping
/// identical results and deduplicating globally against the originals and
/// earlier artificial triples (on whitespace-normalized text). Output is
/// sorted by (parent id, pivot order, target) with per-parent ordinal ids.
/// Provider failures skip the combination; only total failure aborts.
pub fn augment_bt(
    dataset: &Dataset,
    config: &BtConfig,
    translator: &dyn Translate,
) -> Result<Dataset> {
    let dedup_key = |q: &str, s: &str| (normalize_ws(q), normalize_ws(s));
    let mut seen: HashSet<(String, String)> = dataset
        .triples
        .iter()
        .map(|t| dedup_key(&t.question, &t.snippet))
        .collect();

    let mut attempts = 0u64;
    let mut provider_skips = 0u64;
    let mut identical_dropped = 0u64;
    let mut relocation_failed = 0u64;
    let mut deduped = 0u64;
    // (parent id, pivot index, target) keeps the final sort stable.
    let mut kept: Vec<(String, usize, BtTarget, Triple)> = Vec::new();

    for triple in &dataset.triples {
        for (pi, pivot) in config.pivots.iter().enumerate() {
            for target in [BtTarget::Question, BtTarget::Snippet] {
                if !config.targets.contains(&target) {
                    continue;
                }
                attempts += 1;
                match round_trip(triple, pivot, target, config.answer_match, translator) {
                    Err(e) => {
                        log::warn!("back-translation skipped for {:?}: {}", triple.id, e);
                        provider_skips += 1;
                    }
                    Ok(RoundTrip::Identical) => identical_dropped += 1,
                    Ok(RoundTrip::AnswerLost) => relocation_failed += 1,
                    Ok(RoundTrip::Kept(t)) => {
                        if seen.insert(dedup_key(&t.question, &t.snippet)) {
                            kept.push((triple.id.clone(), pi, target, t));
                        } else {
                            deduped += 1;
                        }
                    }
                }
            }
        }
    }

    if attempts > 0 && provider_skips == attempts {
        return Err(Error::Provider(GatewayError::Exhausted {
            attempts: attempts as u32,
            message: "every back-translation request failed".into(),
        }));
    }

    kept.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ordinals: HashMap<String, usize> = HashMap::new();
    let triples: Vec<Triple> = kept
        .into_iter()
        .map(|(parent, _, _, mut t)| {
            let ordinal = ordinals.entry(parent.clone()).or_insert(0);
            t.id = Triple::derived_id(&parent, Method::Backtranslation, *ordinal);
            *ordinal += 1;
            t
        })
        .collect();
    let output = triples.len();

    let mut out = Dataset::new(triples);
    out.set_meta("strategy", "backtranslation");
    out.set_meta("input", dataset.len());
    out.set_meta("generated", attempts - provider_skips);
    out.set_meta("skipped", provider_skips);
    out.set_meta("identical_dropped", identical_dropped);
    out.set_meta("relocation_failed", relocation_failed);
    out.set_meta("deduped", deduped);
    out.set_meta("filtered", identical_dropped + relocation_failed);
    out.set_meta("provider_calls", attempts * 2);
    out.set_meta("output", output);
    Ok(out)
}
