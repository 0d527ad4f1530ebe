//! Rule-based sentence segmentation.
//!
//! A sentence ends at `.`, `!` or `?` followed by whitespace and then an
//! uppercase letter or digit, unless the period closes a guarded
//! abbreviation ("e.g.", "Fig.", "et al.", single-letter initials). Decimal
//! points never split because a digit, not whitespace, follows them. The
//! guard list ships as a data file so tests can pin segmenter behavior.

use std::collections::BTreeSet;
use std::sync::OnceLock;

/// One segmented sentence; offsets are char-based into the segmented text,
/// trimmed so that sentences cover exactly the non-whitespace content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

const ABBREVIATIONS_FILE: &str = include_str!("../data/abbreviations_en.txt");

fn abbreviations() -> &'static Vec<Vec<char>> {
    static LIST: OnceLock<Vec<Vec<char>>> = OnceLock::new();
    LIST.get_or_init(|| {
        let set: BTreeSet<&str> = ABBREVIATIONS_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        set.into_iter().map(|s| s.chars().collect()).collect()
    })
}

/// The period at `dot_idx` closes a guarded abbreviation or a single
/// uppercase initial ("J. K. Rowling", "B. subtilis").
fn is_guarded(chars: &[char], dot_idx: usize) -> bool {
    // Single uppercase char before the dot, preceded by a non-alphanumeric.
    if dot_idx >= 1 && chars[dot_idx - 1].is_uppercase() {
        let before = dot_idx.checked_sub(2).map(|i| chars[i]);
        if before.is_none_or(|c| !c.is_alphanumeric()) {
            return true;
        }
    }
    for entry in abbreviations() {
        let n = entry.len();
        if dot_idx + 1 < n {
            continue;
        }
        let start = dot_idx + 1 - n;
        if chars[start..=dot_idx] != entry[..] {
            continue;
        }
        // Entry must start at a word boundary ("Unfig." is not "fig.").
        let before = start.checked_sub(1).map(|i| chars[i]);
        if before.is_none_or(|c| !c.is_alphanumeric()) {
            return true;
        }
    }
    false
}

/// Deterministic rule-based segmentation. Offsets satisfy: sentences are
/// ordered, non-overlapping, and cover all non-whitespace text; slicing the
/// input by `[start, end)` chars reproduces each sentence's text.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut boundaries: Vec<usize> = Vec::new();

    for i in 0..chars.len() {
        let c = chars[i];
        if c != '.' && c != '!' && c != '?' {
            continue;
        }
        if i + 1 >= chars.len() || !chars[i + 1].is_whitespace() {
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && chars[j].is_whitespace() {
            j += 1;
        }
        if j >= chars.len() {
            continue;
        }
        if !(chars[j].is_uppercase() || chars[j].is_numeric()) {
            continue;
        }
        if c == '.' && is_guarded(&chars, i) {
            continue;
        }
        boundaries.push(i + 1);
    }
    boundaries.push(chars.len());

    let mut sentences = Vec::new();
    let mut seg_start = 0;
    for boundary in boundaries {
        let mut start = seg_start;
        while start < boundary && chars[start].is_whitespace() {
            start += 1;
        }
        let mut end = boundary;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if start < end {
            sentences.push(Sentence {
                index: sentences.len(),
                text: chars[start..end].iter().collect(),
                start,
                end,
            });
        }
        seg_start = boundary;
    }
    sentences
}
