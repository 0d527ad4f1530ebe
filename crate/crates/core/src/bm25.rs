//! Okapi BM25 scoring over an inverted index.
//!
//! Scores use the non-negative idf variant,
//! `idf = ln(1 + (N - df + 0.5) / (df + 0.5))`, with the usual term-frequency
//! normalization `tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))`.
//! Query tokens are the same lowercased alphanumeric runs the index is built
//! from; repeated query tokens contribute additively.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::text::index_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<S> {
    pub k1: S,
    pub b: S,
}

impl<S: Scalar> Default for Bm25Params<S> {
    fn default() -> Self {
        Bm25Params {
            k1: S::from_config(1.2),
            b: S::from_config(0.75),
        }
    }
}

/// Inverted index over a document collection. Postings and lengths are
/// token counts; scoring is generic over the scalar type.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Bm25Index {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    /// term -> (doc ordinal, term frequency), ordinals ascending
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    /// Build from `(doc_id, body)` pairs. Caller guarantees unique ids.
    pub fn build<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut index = Bm25Index::default();
        for (doc_id, body) in docs {
            let ordinal = index.doc_ids.len() as u32;
            index.doc_ids.push(doc_id.to_string());
            let tokens = index_tokens(body);
            index.doc_lengths.push(tokens.len() as u32);
            let mut freqs: BTreeMap<String, u32> = BTreeMap::new();
            for token in tokens {
                *freqs.entry(token).or_insert(0) += 1;
            }
            for (term, tf) in freqs {
                index.postings.entry(term).or_default().push((ordinal, tf));
            }
        }
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn average_doc_length(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            return 0.0;
        }
        self.doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / self.doc_lengths.len() as f64
    }

    /// Ranked search: scores descending, ties broken by ascending doc_id,
    /// at most `top_k` results. Documents that match no query term are
    /// omitted. An empty query (after tokenization) yields no results.
    pub fn search<S: Scalar>(
        &self,
        query: &str,
        top_k: usize,
        params: &Bm25Params<S>,
    ) -> Vec<(String, S)> {
        let tokens = index_tokens(query);
        if tokens.is_empty() || self.doc_ids.is_empty() || top_k == 0 {
            return Vec::new();
        }
        let n = S::from_count(self.doc_count());
        let avgdl = S::from_config(self.average_doc_length());
        let half = S::from_config(0.5);
        let one = S::one();

        let mut scores: HashMap<u32, S> = HashMap::new();
        for token in &tokens {
            let Some(postings) = self.postings.get(token) else {
                continue;
            };
            let df = S::from_count(postings.len());
            let idf = (one + (n - df + half) / (df + half)).ln();
            for &(ordinal, tf) in postings {
                let tf = S::from_count(tf as usize);
                let dl = S::from_count(self.doc_lengths[ordinal as usize] as usize);
                let norm = tf * (params.k1 + one)
                    / (tf + params.k1 * (one - params.b + params.b * dl / avgdl));
                let contribution = idf * norm;
                scores
                    .entry(ordinal)
                    .and_modify(|s| *s = *s + contribution)
                    .or_insert(contribution);
            }
        }

        let mut ranked: Vec<(String, S)> = scores
            .into_iter()
            .map(|(ordinal, score)| (self.doc_ids[ordinal as usize].clone(), score))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked.truncate(top_k);
        ranked
    }
}
