//! Text utilities shared across the toolkit.
//!
//! All offsets in this crate count Unicode scalar values (chars), not bytes,
//! so spans are portable across implementations and serializations. The
//! helpers here convert between the two and provide the matching and
//! tokenization primitives the converters and augmenters build on.

use serde::{Deserialize, Serialize};

/// Answer-string matching mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    #[default]
    Casefold,
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice by char offsets. `None` if the range is out of bounds or inverted.
pub fn slice_chars(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut byte_start = None;
    let mut byte_end = None;
    for (i, (b, _)) in s.char_indices().enumerate() {
        if i == start {
            byte_start = Some(b);
        }
        if i == end {
            byte_end = Some(b);
            break;
        }
    }
    let n = char_len(s);
    if start == n {
        byte_start = Some(s.len());
    }
    if end == n {
        byte_end = Some(s.len());
    }
    Some(&s[byte_start?..byte_end?])
}

/// Collapse whitespace runs to a single space and trim both ends.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Text folded for caseless matching, with a map back to source char offsets.
///
/// Folding uses the full Unicode lowercase mapping, so one source char may
/// expand to several folded chars; `origin[k]` is the source char index that
/// produced folded char `k`.
struct Folded {
    chars: Vec<char>,
    origin: Vec<usize>,
    source_len: usize,
}

fn fold(s: &str, mode: MatchMode) -> Folded {
    let mut chars = Vec::with_capacity(s.len());
    let mut origin = Vec::with_capacity(s.len());
    let mut source_len = 0;
    for (i, c) in s.chars().enumerate() {
        source_len = i + 1;
        match mode {
            MatchMode::Exact => {
                chars.push(c);
                origin.push(i);
            }
            MatchMode::Casefold => {
                for f in c.to_lowercase() {
                    chars.push(f);
                    origin.push(i);
                }
            }
        }
    }
    Folded {
        chars,
        origin,
        source_len,
    }
}

impl Folded {
    /// Folded position `k` starts a new source char.
    fn aligned_start(&self, k: usize) -> bool {
        k == 0 || self.origin[k - 1] != self.origin[k]
    }

    /// Folded position `k` (exclusive end) falls on a source char boundary.
    fn aligned_end(&self, k: usize) -> bool {
        k == self.chars.len() || self.origin[k - 1] != self.origin[k]
    }

    fn source_end(&self, k: usize) -> usize {
        if k == self.chars.len() {
            self.source_len
        } else {
            self.origin[k]
        }
    }
}

/// All non-overlapping, leftmost-greedy occurrences of any needle in
/// `haystack`, as char-offset `(start, end)` pairs sorted by start.
///
/// At each position the longest matching needle wins; ties go to the earlier
/// needle in the list. Casefold mode matches after Unicode lowercasing but
/// the returned offsets index the original haystack. Empty needles never
/// match.
pub fn find_all(haystack: &str, needles: &[String], mode: MatchMode) -> Vec<(usize, usize)> {
    let hay = fold(haystack, mode);
    let folded_needles: Vec<Vec<char>> = needles
        .iter()
        .map(|n| fold(n, mode).chars)
        .filter(|f| !f.is_empty())
        .collect();
    if folded_needles.is_empty() || hay.chars.is_empty() {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut pos = 0;
    while pos < hay.chars.len() {
        if !hay.aligned_start(pos) {
            pos += 1;
            continue;
        }
        // (source start, source end, folded end) of the best match here
        let mut best: Option<(usize, usize, usize)> = None;
        for needle in &folded_needles {
            let m = needle.len();
            if pos + m > hay.chars.len() {
                continue;
            }
            if hay.chars[pos..pos + m] != needle[..] || !hay.aligned_end(pos + m) {
                continue;
            }
            let start = hay.origin[pos];
            let end = hay.source_end(pos + m);
            if best.is_none_or(|(_, be, _)| end > be) {
                best = Some((start, end, pos + m));
            }
        }
        match best {
            Some((start, end, folded_end)) => {
                out.push((start, end));
                pos = folded_end;
            }
            None => pos += 1,
        }
    }
    out
}

/// A token's char-offset range within its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

/// Word tokens as alphanumeric runs, allowing internal hyphens
/// ("mir-137" is one token). Offsets are char-based.
pub fn word_tokens(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            if chars[i].is_alphanumeric() {
                i += 1;
            } else if chars[i] == '-'
                && i > start
                && chars[i - 1].is_alphanumeric()
                && i + 1 < chars.len()
                && chars[i + 1].is_alphanumeric()
            {
                i += 1;
            } else {
                break;
            }
        }
        tokens.push(TokenSpan { start, end: i });
    }
    tokens
}

/// Lowercased alphanumeric-run tokens, as used by the retrieval index.
pub fn index_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Derive a child seed from a base seed and a string salt, stable across
/// platforms and runs.
pub fn derive_seed(base: u64, salt: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(salt.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
