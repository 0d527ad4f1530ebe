//! Word-substitution augmentation.
//!
//! Two candidate sources share one pipeline: embedding neighbors (w2v mode,
//! cosine floor C) and masked-LM suggestions (mlm mode, probability floor
//! P). For a snippet with per-position candidate counts `k_i`, the variant
//! space holds `(k_1+1)(k_2+1)···(k_n+1) - 1` instances (every combination
//! of "keep or replace", minus the identity). Variants are sampled uniformly
//! without replacement from that space; stopword and answer-span tokens are
//! never substituted, so gold spans stay valid after recomputation.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{AnswerSpan, Dataset, Method, Provenance, Triple};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gateway::{FillMask, GatewayError, MASK_TOKEN};
use crate::scalar::Scalar;
use crate::text::{self, derive_seed, slice_chars, word_tokens, TokenSpan};

/// Above this space size, sampling switches from full enumeration to
/// rejection sampling; both draw uniformly without replacement.
const ENUMERATION_LIMIT: u64 = 4096;

/// Space sizes saturate here instead of overflowing.
pub const MAX_SPACE: u64 = u64::MAX;

const STOPWORDS_FILE: &str = include_str!("../data/stopwords_en.txt");

/// The shipped English stopword list.
pub fn default_stopwords() -> &'static BTreeSet<String> {
    static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubstMode {
    W2v,
    Mlm,
}

impl SubstMode {
    fn method(self) -> Method {
        match self {
            SubstMode::W2v => Method::W2vSubst,
            SubstMode::Mlm => Method::MlmSubst,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubstConfig {
    pub mode: SubstMode,
    /// Max candidates per token (K).
    pub k: usize,
    /// Cosine floor (C), w2v mode.
    pub cosine_floor: f64,
    /// Probability floor (P), mlm mode.
    pub probability_floor: f64,
    /// Optional cap on positions changed per variant.
    pub max_tokens_changed: Option<usize>,
    /// Target variant count (per triple for [`generate_substitutions`],
    /// dataset-wide for [`augment_substitution`]).
    pub n_samples: u64,
    pub seed: u64,
    /// `None` uses the shipped list.
    pub stopwords: Option<BTreeSet<String>>,
    /// Abort when more than this fraction of provider calls fail (mlm mode).
    pub max_failure_ratio: f64,
}

impl Default for SubstConfig {
    fn default() -> Self {
        SubstConfig {
            mode: SubstMode::W2v,
            k: 10,
            cosine_floor: 0.95,
            probability_floor: 0.95,
            max_tokens_changed: None,
            n_samples: 10_000,
            seed: 1,
            stopwords: None,
            max_failure_ratio: 0.5,
        }
    }
}

impl SubstConfig {
    fn stopword(&self, token: &str) -> bool {
        let lowered = token.to_lowercase();
        self.stopwords
            .as_ref()
            .unwrap_or_else(|| default_stopwords())
            .contains(&lowered)
    }
}

/// Replacement source: an embedding table (w2v) or a fill-mask service (mlm).
pub enum SubstResource<'a, S> {
    Table(&'a EmbeddingTable<S>),
    Masker(&'a dyn FillMask),
}

/// Per-position replacement candidates for one snippet.
#[derive(Debug, Clone)]
pub struct CandidateSet<S> {
    pub positions: Vec<PositionCandidates<S>>,
}

#[derive(Debug, Clone)]
pub struct PositionCandidates<S> {
    pub token: TokenSpan,
    /// `(replacement, score)` sorted by score descending; empty for
    /// stopwords, answer-span tokens, and tokens without viable candidates.
    pub candidates: Vec<(String, S)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceSize {
    pub size: u64,
    pub saturated: bool,
}

/// `(k_1+1)···(k_n+1) - 1` over the candidate positions, saturating at
/// [`MAX_SPACE`].
pub fn substitution_space_size<S>(candidates: &CandidateSet<S>) -> SpaceSize {
    let mut product: u128 = 1;
    let mut saturated = false;
    for position in &candidates.positions {
        product = product.saturating_mul(position.candidates.len() as u128 + 1);
        if product > MAX_SPACE as u128 {
            saturated = true;
            product = MAX_SPACE as u128;
        }
    }
    let size = if saturated {
        MAX_SPACE
    } else {
        (product - 1) as u64
    };
    SpaceSize { size, saturated }
}

fn token_in_spans(token: &TokenSpan, spans: &[AnswerSpan]) -> bool {
    spans
        .iter()
        .any(|s| token.start < s.end && s.start < token.end)
}

/// Candidates from embedding neighbors: cosine >= C, replacement differs
/// from the original token, at most K per position.
pub fn candidate_set_w2v<S: Scalar>(
    triple: &Triple,
    table: &EmbeddingTable<S>,
    config: &SubstConfig,
) -> CandidateSet<S> {
    let floor = S::from_config(config.cosine_floor);
    let positions = word_tokens(&triple.snippet)
        .into_iter()
        .map(|token| {
            let token_text =
                slice_chars(&triple.snippet, token.start, token.end).expect("token in snippet");
            let candidates = if config.stopword(token_text) || token_in_spans(&token, &triple.spans)
            {
                Vec::new()
            } else {
                table
                    .neighbors(token_text, config.k, floor)
                    .into_iter()
                    .filter(|(word, _)| word != token_text)
                    .collect()
            };
            PositionCandidates { token, candidates }
        })
        .collect();
    CandidateSet { positions }
}

/// Candidates from a masked LM: mask each substitutable position in turn and
/// keep suggestions with probability >= P that are single whole words and
/// differ from the original. Provider failures skip the position and are
/// counted.
pub fn candidate_set_mlm(
    triple: &Triple,
    masker: &dyn FillMask,
    config: &SubstConfig,
) -> (CandidateSet<f64>, MlmCallStats) {
    let mut stats = MlmCallStats::default();
    let positions = word_tokens(&triple.snippet)
        .into_iter()
        .map(|token| {
            let token_text =
                slice_chars(&triple.snippet, token.start, token.end).expect("token in snippet");
            if config.stopword(token_text) || token_in_spans(&token, &triple.spans) {
                return PositionCandidates {
                    token,
                    candidates: Vec::new(),
                };
            }
            let masked = splice(&triple.snippet, &token, MASK_TOKEN);
            stats.calls += 1;
            let candidates = match masker.fill_mask(&masked) {
                Ok(suggestions) => suggestions
                    .into_iter()
                    .filter(|s| s.probability >= config.probability_floor)
                    .filter(|s| s.word != token_text)
                    .filter(|s| is_single_word(&s.word))
                    .map(|s| (s.word, s.probability))
                    .take(config.k)
                    .collect(),
                Err(e) => {
                    log::warn!("fill_mask failed for {:?}: {}", triple.id, e);
                    stats.failures += 1;
                    Vec::new()
                }
            };
            PositionCandidates { token, candidates }
        })
        .collect();
    (CandidateSet { positions }, stats)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MlmCallStats {
    pub calls: u64,
    pub failures: u64,
}

/// A suggestion usable as a replacement must tokenize to itself: one word
/// token covering the whole string (subword pieces are discarded).
fn is_single_word(word: &str) -> bool {
    let tokens = word_tokens(word);
    tokens.len() == 1
        && tokens[0].start == 0
        && tokens[0].end == text::char_len(word)
}

/// Replace one token's char range with `replacement`.
fn splice(snippet: &str, token: &TokenSpan, replacement: &str) -> String {
    let chars: Vec<char> = snippet.chars().collect();
    let mut out: String = chars[..token.start].iter().collect();
    out.push_str(replacement);
    out.extend(&chars[token.end..]);
    out
}

fn build_candidates<S: Scalar>(
    triple: &Triple,
    config: &SubstConfig,
    resource: &SubstResource<'_, S>,
) -> Result<(CandidateSet<f64>, MlmCallStats)> {
    match (config.mode, resource) {
        (SubstMode::W2v, SubstResource::Table(table)) => {
            let set = candidate_set_w2v(triple, table, config);
            // Scores normalize to f64 so one sampling path serves both modes.
            let positions = set
                .positions
                .into_iter()
                .map(|p| PositionCandidates {
                    token: p.token,
                    candidates: p
                        .candidates
                        .into_iter()
                        .map(|(w, s)| (w, s.to_f64().expect("finite score")))
                        .collect(),
                })
                .collect();
            Ok((CandidateSet { positions }, MlmCallStats::default()))
        }
        (SubstMode::Mlm, SubstResource::Masker(masker)) => {
            Ok(candidate_set_mlm(triple, *masker, config))
        }
        (SubstMode::W2v, _) => Err(Error::Config(
            "w2v substitution requires an embedding table".into(),
        )),
        (SubstMode::Mlm, _) => Err(Error::Config(
            "mlm substitution requires a fill_mask provider".into(),
        )),
    }
}

/// One variant: for each position, 0 keeps the token, `c > 0` picks
/// candidate `c - 1`.
type Assignment = Vec<u32>;

fn changed_count(assignment: &Assignment) -> usize {
    assignment.iter().filter(|&&c| c > 0).count()
}

fn enumerate_assignments(
    candidates: &CandidateSet<f64>,
    max_changed: Option<usize>,
) -> Vec<Assignment> {
    let radices: Vec<u32> = candidates
        .positions
        .iter()
        .map(|p| p.candidates.len() as u32 + 1)
        .collect();
    let mut out = Vec::new();
    let mut current: Assignment = vec![0; radices.len()];
    loop {
        // Mixed-radix increment; the all-zero identity is never emitted.
        let mut i = 0;
        loop {
            if i == radices.len() {
                return out;
            }
            current[i] += 1;
            if current[i] < radices[i] {
                break;
            }
            current[i] = 0;
            i += 1;
        }
        if max_changed.is_none_or(|m| changed_count(&current) <= m) {
            out.push(current.clone());
        }
    }
}

fn sample_assignments(
    candidates: &CandidateSet<f64>,
    space: SpaceSize,
    target: u64,
    max_changed: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Vec<Assignment> {
    if target == 0 || space.size == 0 {
        return Vec::new();
    }
    if space.size <= ENUMERATION_LIMIT && !space.saturated {
        let mut all = enumerate_assignments(candidates, max_changed);
        let n = (target as usize).min(all.len());
        // Partial Fisher-Yates: uniform n-subset; emission keeps
        // enumeration order for determinism.
        let len = all.len();
        let mut picked: Vec<usize> = (0..len).collect();
        for i in 0..n {
            let j = rng.random_range(i..len);
            picked.swap(i, j);
        }
        let mut chosen: Vec<usize> = picked[..n].to_vec();
        chosen.sort_unstable();
        return chosen.into_iter().map(|i| std::mem::take(&mut all[i])).collect();
    }

    let radices: Vec<u32> = candidates
        .positions
        .iter()
        .map(|p| p.candidates.len() as u32 + 1)
        .collect();
    let mut seen: HashSet<Assignment> = HashSet::new();
    let mut out = Vec::new();
    let mut attempts: u64 = 0;
    let attempt_cap = target.saturating_mul(200).saturating_add(10_000);
    while (out.len() as u64) < target && attempts < attempt_cap {
        attempts += 1;
        let draw: Assignment = radices.iter().map(|&r| rng.random_range(0..r)).collect();
        if changed_count(&draw) == 0 {
            continue;
        }
        if max_changed.is_some_and(|m| changed_count(&draw) > m) {
            continue;
        }
        if seen.insert(draw.clone()) {
            out.push(draw);
        }
    }
    out
}

fn apply_assignment(
    triple: &Triple,
    candidates: &CandidateSet<f64>,
    assignment: &Assignment,
) -> (String, Vec<AnswerSpan>) {
    let chars: Vec<char> = triple.snippet.chars().collect();
    let mut snippet = String::new();
    let mut cursor = 0usize;
    // (original char position, char-length delta) per replaced token
    let mut deltas: Vec<(usize, isize)> = Vec::new();
    for (position, &choice) in candidates.positions.iter().zip(assignment) {
        if choice == 0 {
            continue;
        }
        let (replacement, _) = &position.candidates[choice as usize - 1];
        let token = position.token;
        snippet.extend(&chars[cursor..token.start]);
        snippet.push_str(replacement);
        deltas.push((
            token.start,
            text::char_len(replacement) as isize - (token.end - token.start) as isize,
        ));
        cursor = token.end;
    }
    snippet.extend(&chars[cursor..]);

    let spans = triple
        .spans
        .iter()
        .map(|span| {
            let shift: isize = deltas
                .iter()
                .take_while(|(pos, _)| *pos < span.start)
                .map(|(_, d)| d)
                .sum();
            AnswerSpan::new(
                (span.start as isize + shift) as usize,
                (span.end as isize + shift) as usize,
            )
        })
        .collect();
    (snippet, spans)
}

fn variants_for_triple(
    triple: &Triple,
    candidates: &CandidateSet<f64>,
    config: &SubstConfig,
    quota: u64,
    seed: u64,
) -> Result<Vec<Triple>> {
    let space = substitution_space_size(candidates);
    let target = quota.min(space.size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignments = sample_assignments(candidates, space, target, config.max_tokens_changed, &mut rng);

    let mut out = Vec::with_capacity(assignments.len());
    for (ordinal, assignment) in assignments.iter().enumerate() {
        let (snippet, spans) = apply_assignment(triple, candidates, assignment);
        // Answer-span tokens are never substituted, so the recomputed spans
        // must select the original answer text exactly.
        for (old, new) in triple.spans.iter().zip(&spans) {
            let before = slice_chars(&triple.snippet, old.start, old.end);
            let after = slice_chars(&snippet, new.start, new.end);
            if before != after {
                return Err(Error::InvalidTriple {
                    id: triple.id.clone(),
                    message: "answer span corrupted by substitution".into(),
                });
            }
        }
        let method = config.mode.method();
        let mut provenance = Provenance::derived(method, &triple.id);
        provenance = provenance.with_param("k", config.k);
        provenance = match config.mode {
            SubstMode::W2v => provenance.with_param("c", config.cosine_floor),
            SubstMode::Mlm => provenance.with_param("p", config.probability_floor),
        };
        out.push(Triple {
            id: Triple::derived_id(&triple.id, method, ordinal),
            question: triple.question.clone(),
            snippet,
            answers: triple.answers.clone(),
            spans,
            source_doc: triple.source_doc.clone(),
            provenance,
        });
    }
    Ok(out)
}

/// Sample up to `config.n_samples` distinct variants of one triple. Returns
/// an empty list when nothing is substitutable.
pub fn generate_substitutions<S: Scalar>(
    triple: &Triple,
    config: &SubstConfig,
    resource: &SubstResource<'_, S>,
) -> Result<Vec<Triple>> {
    let (candidates, _) = build_candidates(triple, config, resource)?;
    variants_for_triple(
        triple,
        &candidates,
        config,
        config.n_samples,
        derive_seed(config.seed, &triple.id),
    )
}

/// Dataset-level substitution: per-triple quotas proportional to each
/// triple's space size (largest remainder going round-robin by triple id),
/// total output `min(n_samples, total space)`, deterministic for a fixed
/// seed. Output is ordered by (parent id, variant index).
pub fn augment_substitution<S: Scalar>(
    dataset: &Dataset,
    config: &SubstConfig,
    resource: &SubstResource<'_, S>,
) -> Result<Dataset> {
    // Candidate computation is the expensive part; parallel per triple.
    let per_triple: Vec<(usize, Result<(CandidateSet<f64>, MlmCallStats)>)> = match resource {
        SubstResource::Table(_) => dataset
            .triples
            .par_iter()
            .enumerate()
            .map(|(i, t)| (i, build_candidates(t, config, resource)))
            .collect(),
        // The gateway enforces its own concurrency bound; sequential here
        // keeps provider call order stable for cache-less runs.
        SubstResource::Masker(_) => dataset
            .triples
            .iter()
            .enumerate()
            .map(|(i, t)| (i, build_candidates(t, config, resource)))
            .collect(),
    };

    let mut candidate_sets = Vec::with_capacity(per_triple.len());
    let mut call_stats = MlmCallStats::default();
    for (_, result) in per_triple {
        let (set, stats) = result?;
        call_stats.calls += stats.calls;
        call_stats.failures += stats.failures;
        candidate_sets.push(set);
    }
    if call_stats.calls > 0 {
        let ratio = call_stats.failures as f64 / call_stats.calls as f64;
        if ratio > config.max_failure_ratio {
            return Err(Error::Provider(GatewayError::Exhausted {
                attempts: call_stats.calls as u32,
                message: format!(
                    "{} of {} fill_mask calls failed (ratio {:.2} > {:.2})",
                    call_stats.failures, call_stats.calls, ratio, config.max_failure_ratio
                ),
            }));
        }
    }

    let spaces: Vec<SpaceSize> = candidate_sets.iter().map(substitution_space_size).collect();
    let total_space: u64 = spaces
        .iter()
        .fold(0u64, |acc, s| acc.saturating_add(s.size));
    let target = config.n_samples.min(total_space);

    // Proportional quotas, floor first.
    let mut quotas: Vec<u64> = spaces
        .iter()
        .map(|s| {
            if total_space == 0 {
                0
            } else {
                ((target as u128 * s.size as u128) / total_space as u128) as u64
            }
        })
        .collect();
    let mut assigned: u64 = quotas.iter().sum();
    // Remainder round-robin by ascending triple id.
    let mut id_order: Vec<usize> = (0..dataset.triples.len()).collect();
    id_order.sort_by(|&a, &b| dataset.triples[a].id.cmp(&dataset.triples[b].id));
    while assigned < target {
        let mut progressed = false;
        for &i in &id_order {
            if assigned == target {
                break;
            }
            if quotas[i] < spaces[i].size {
                quotas[i] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let generated: Vec<Result<Vec<Triple>>> = dataset
        .triples
        .par_iter()
        .enumerate()
        .map(|(i, triple)| {
            variants_for_triple(
                triple,
                &candidate_sets[i],
                config,
                quotas[i],
                derive_seed(config.seed, &triple.id),
            )
        })
        .collect();

    let mut triples = Vec::new();
    for batch in generated {
        triples.extend(batch?);
    }
    triples.sort_by(|a, b| a.id.cmp(&b.id));
    let generated_count = triples.len();

    let mut out = Dataset::new(triples);
    out.set_meta("strategy", config.mode.method().name());
    out.set_meta("input", dataset.len());
    out.set_meta("generated", generated_count);
    out.set_meta("output", generated_count);
    out.set_meta("total_space", total_space);
    out.set_meta("provider_calls", call_stats.calls);
    out.set_meta("skipped", call_stats.failures);
    out.set_meta("seed", config.seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::locate_answer;
    use crate::gateway::StubFillMask;
    use crate::text::MatchMode;
    use std::collections::HashMap;

    fn triple(id: &str, snippet: &str, answer: &str) -> Triple {
        let spans = locate_answer(snippet, &[answer.to_string()], MatchMode::Exact);
        assert!(!spans.is_empty(), "answer must occur in test snippet");
        Triple {
            id: id.into(),
            question: "What is tested?".into(),
            snippet: snippet.into(),
            answers: vec![answer.into()],
            spans,
            source_doc: None,
            provenance: Provenance::original(),
        }
    }

    fn angled(deg: f64) -> Vec<f64> {
        let rad = deg.to_radians();
        vec![rad.cos(), rad.sin(), 0.0]
    }

    /// Table where "alpha" has neighbors {alphb, alphc}, "beta" has {betb},
    /// and "gamma" has none above the floor.
    fn toy_table() -> EmbeddingTable<f64> {
        EmbeddingTable::from_rows(
            3,
            vec![
                ("alpha".to_string(), angled(0.0)),
                ("alphb".to_string(), angled(5.0)),
                ("alphc".to_string(), angled(-5.0)),
                ("beta".to_string(), angled(90.0)),
                ("betb".to_string(), angled(95.0)),
                ("gamma".to_string(), angled(180.0)),
                ("answer".to_string(), angled(45.0)),
                ("answr2".to_string(), angled(47.0)),
            ],
        )
        .unwrap()
    }

    fn config(n: u64) -> SubstConfig {
        SubstConfig {
            n_samples: n,
            ..SubstConfig::default()
        }
    }

    /// Brute-force oracle: enumerate the whole variant space by direct
    /// string surgery over independently computed candidate lists.
    fn brute_force_space(snippet: &str, candidates_per_token: &[Vec<&str>]) -> BTreeSet<String> {
        let tokens = word_tokens(snippet);
        assert_eq!(tokens.len(), candidates_per_token.len());
        let mut variants = BTreeSet::new();
        let radices: Vec<usize> = candidates_per_token.iter().map(|c| c.len() + 1).collect();
        let total: usize = radices.iter().product();
        for code in 1..total {
            let mut rest = code;
            let mut choice = Vec::new();
            for r in &radices {
                choice.push(rest % r);
                rest /= r;
            }
            if choice.iter().all(|&c| c == 0) {
                continue;
            }
            let chars: Vec<char> = snippet.chars().collect();
            let mut out = String::new();
            let mut cursor = 0;
            for (i, token) in tokens.iter().enumerate() {
                out.extend(&chars[cursor..token.start]);
                if choice[i] == 0 {
                    out.extend(&chars[token.start..token.end]);
                } else {
                    out.push_str(candidates_per_token[i][choice[i] - 1]);
                }
                cursor = token.end;
            }
            out.extend(&chars[cursor..]);
            variants.insert(out);
        }
        variants
    }

    #[test]
    fn space_size_formula() {
        let mk = |ks: &[usize]| CandidateSet::<f64> {
            positions: ks
                .iter()
                .enumerate()
                .map(|(i, &k)| PositionCandidates {
                    token: TokenSpan { start: i * 2, end: i * 2 + 1 },
                    candidates: (0..k).map(|j| (format!("w{}", j), 1.0)).collect(),
                })
                .collect(),
        };
        assert_eq!(substitution_space_size(&mk(&[0, 0])).size, 0);
        assert_eq!(substitution_space_size(&mk(&[1, 1, 1])).size, 7);
        assert_eq!(substitution_space_size(&mk(&[2, 1])).size, 5);
        let huge = mk(&vec![3; 64]);
        let space = substitution_space_size(&huge);
        assert!(space.saturated);
        assert_eq!(space.size, MAX_SPACE);
    }

    #[test]
    fn space_size_matches_bruteforce_enumeration() {
        let snippet = "alpha beta gamma answer";
        let t = triple("t", snippet, "answer");
        let table = toy_table();
        let cand = candidate_set_w2v(&t, &table, &config(100));
        // alpha -> 2 neighbors, beta -> 1, gamma -> 0, answer -> protected.
        let sizes: Vec<usize> = cand.positions.iter().map(|p| p.candidates.len()).collect();
        assert_eq!(sizes, vec![2, 1, 0, 0]);
        let space = substitution_space_size(&cand);
        assert_eq!(space.size, 5);
        let oracle = brute_force_space(snippet, &[
            vec!["alphb", "alphc"],
            vec!["betb"],
            vec![],
            vec![],
        ]);
        assert_eq!(oracle.len(), 5);
    }

    #[test]
    fn generates_exactly_the_space_when_quota_covers_it() {
        let snippet = "alpha beta gamma answer";
        let t = triple("t", snippet, "answer");
        let table = toy_table();
        let got = generate_substitutions(&t, &config(100), &SubstResource::Table(&table)).unwrap();
        let got_snippets: BTreeSet<String> = got.iter().map(|v| v.snippet.clone()).collect();
        assert_eq!(got.len(), 5, "distinct variants must fill the space");
        assert_eq!(got_snippets.len(), 5);
        let oracle = brute_force_space(snippet, &[
            vec!["alphb", "alphc"],
            vec!["betb"],
            vec![],
            vec![],
        ]);
        assert_eq!(got_snippets, oracle);
        for v in &got {
            assert_ne!(v.snippet, t.snippet);
            assert_eq!(v.provenance.parent_id.as_deref(), Some("t"));
            v.validate().unwrap();
            // Answer preserved.
            assert_eq!(v.span_text(v.spans[0]).unwrap(), "answer");
        }
    }

    #[test]
    fn stopword_only_snippet_yields_nothing() {
        let t = triple("t", "the of and answer", "answer");
        let table = toy_table();
        let got = generate_substitutions(&t, &config(10), &SubstResource::Table(&table)).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn single_candidate_changes_exactly_that_token() {
        let t = triple("t", "beta answer", "answer");
        let table = toy_table();
        let got = generate_substitutions(&t, &config(10), &SubstResource::Table(&table)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].snippet, "betb answer");
    }

    #[test]
    fn answer_tokens_are_protected_even_with_neighbors() {
        // "answer" has a close neighbor in the table but sits in the span.
        let t = triple("t", "answer alone", "answer");
        let table = toy_table();
        let cand = candidate_set_w2v(&t, &table, &config(10));
        assert!(cand.positions[0].candidates.is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_without_replacement() {
        let snippet = "alpha beta alpha beta answer";
        let t = triple("t", snippet, "answer");
        let table = toy_table();
        // Space: (2+1)(1+1)(2+1)(1+1) - 1 = 35; sample fewer.
        let cfg = config(12);
        let a = generate_substitutions(&t, &cfg, &SubstResource::Table(&table)).unwrap();
        let b = generate_substitutions(&t, &cfg, &SubstResource::Table(&table)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        let distinct: BTreeSet<&str> = a.iter().map(|v| v.snippet.as_str()).collect();
        assert_eq!(distinct.len(), 12);
    }

    #[test]
    fn w2v_scores_recheck_against_table() {
        let t = triple("t", "alpha beta answer", "answer");
        let table = toy_table();
        let cand = candidate_set_w2v(&t, &table, &config(10));
        for position in &cand.positions {
            let token = slice_chars(&t.snippet, position.token.start, position.token.end).unwrap();
            for (word, score) in &position.candidates {
                let recomputed = table.cosine(token, word).unwrap();
                assert!((recomputed - score).abs() < 1e-12);
                assert!(recomputed >= 0.95);
            }
        }
    }

    #[test]
    fn max_tokens_changed_caps_variants() {
        let snippet = "alpha beta answer";
        let t = triple("t", snippet, "answer");
        let table = toy_table();
        let cfg = SubstConfig {
            max_tokens_changed: Some(1),
            n_samples: 100,
            ..SubstConfig::default()
        };
        let got = generate_substitutions(&t, &cfg, &SubstResource::Table(&table)).unwrap();
        // Space without the cap is (2+1)(1+1)-1 = 5; with <=1 change: 3.
        assert_eq!(got.len(), 3);
        for v in &got {
            let orig: Vec<&str> = snippet.split(' ').collect();
            let new: Vec<&str> = v.snippet.split(' ').collect();
            let changed = orig.iter().zip(&new).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1);
        }
    }

    #[test]
    fn mlm_candidates_respect_probability_floor() {
        let snippet = "beta answer";
        let t = triple("t", snippet, "answer");
        let mut fixture = HashMap::new();
        fixture.insert(
            "[MASK] answer".to_string(),
            vec![
                crate::gateway::MaskSuggestion { word: "betb".into(), probability: 0.97 },
                crate::gateway::MaskSuggestion { word: "weak".into(), probability: 0.5 },
                crate::gateway::MaskSuggestion { word: "two words".into(), probability: 0.99 },
            ],
        );
        let masker = StubFillMask::new(fixture);
        let cfg = SubstConfig {
            mode: SubstMode::Mlm,
            n_samples: 10,
            ..SubstConfig::default()
        };
        let got = generate_substitutions(&t, &cfg, &SubstResource::<f64>::Masker(&masker)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].snippet, "betb answer");
        assert_eq!(got[0].provenance.method, Method::MlmSubst);
        assert_eq!(got[0].provenance.params["p"], "0.95");
    }

    #[test]
    fn dataset_quotas_follow_space_sizes() {
        // Spaces 3 and 1 (alpha alone has 2 neighbors + beta 1 -> adjust):
        // t1: "alpha answer" -> space 2; use distinct snippets for spaces 3/1.
        let t1 = triple("t1", "alpha beta answer", "answer"); // space 5
        let t2 = triple("t2", "beta answer", "answer"); // space 1
        let ds = Dataset::new(vec![t1, t2]);
        let table = toy_table();
        let cfg = config(4);
        let out = augment_substitution(&ds, &cfg, &SubstResource::Table(&table)).unwrap();
        // target 4 over total space 6: quotas floor(4*5/6)=3 and floor(4*1/6)=0,
        // remainder 1 goes to t1 by id order? t1 has room (3<5): gets it -> 4+0?
        // Largest-remainder here is round-robin by id: t1 then t2. t1 -> 4? No:
        // assigned=3, target=4, round robin starts at t1: quota 3->4. t1=4, t2=0.
        assert_eq!(out.len(), 4);
        let by_parent = |p: &str| {
            out.triples
                .iter()
                .filter(|t| t.provenance.parent_id.as_deref() == Some(p))
                .count()
        };
        assert_eq!(by_parent("t1"), 4);
        assert_eq!(by_parent("t2"), 0);
    }

    #[test]
    fn dataset_output_capped_by_total_space() {
        let t1 = triple("t1", "alpha beta answer", "answer"); // space 5
        let t2 = triple("t2", "beta answer", "answer"); // space 1
        let ds = Dataset::new(vec![t1, t2]);
        let table = toy_table();
        let out = augment_substitution(&ds, &config(100), &SubstResource::Table(&table)).unwrap();
        assert_eq!(out.len(), 6);
        let out2 = augment_substitution(&ds, &config(100), &SubstResource::Table(&table)).unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn zero_samples_is_empty() {
        let ds = Dataset::new(vec![triple("t1", "alpha answer", "answer")]);
        let table = toy_table();
        let out = augment_substitution(&ds, &config(0), &SubstResource::Table(&table)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn unchanged_text_outside_replacements() {
        let snippet = "alpha, beta; gamma answer!";
        let t = triple("t", snippet, "answer");
        let table = toy_table();
        let got = generate_substitutions(&t, &config(100), &SubstResource::Table(&table)).unwrap();
        for v in &got {
            // Punctuation skeleton intact.
            assert!(v.snippet.contains(','));
            assert!(v.snippet.contains(';'));
            assert!(v.snippet.ends_with("answer!"));
        }
    }
}
