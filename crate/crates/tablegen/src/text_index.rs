//! Inverted index with two scoring functions.
//!
//! Query likelihood with Dirichlet smoothing, in log space:
//!
//! ```text
//! score(q, d) = sum_t log( (tf(t, d) + mu * P(t | C)) / (|d| + mu) )
//! ```
//!
//! summed over query token occurrences; terms absent from the whole
//! collection are skipped so scores stay finite. BM25 (k1, b) is used for
//! table retrieval:
//!
//! ```text
//! score(q, d) = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//! idf(t)     = ln(1 + (N - df + 0.5) / (df + 0.5))
//! ```
//!
//! Documents are indexed from pre-analyzed token streams, so the caller
//! controls tokenization. Rankings are deterministic: score descending, then
//! document id ascending.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Posting {
    doc: u32,
    tf: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_index: BTreeMap<String, u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u64>,
    collection_length: u64,
    collection_tf: BTreeMap<String, u64>,
}

impl InvertedIndex {
    /// Indexes `(id, tokens)` documents. A repeated id replaces the earlier
    /// document's tokens (the id keeps its slot).
    pub fn build<I>(docs: I) -> InvertedIndex
    where
        I: IntoIterator<Item = (String, Vec<String>)>,
    {
        let mut ordered: Vec<(String, Vec<String>)> = Vec::new();
        let mut slots: BTreeMap<String, usize> = BTreeMap::new();
        for (id, tokens) in docs {
            match slots.get(&id) {
                Some(&i) => ordered[i].1 = tokens,
                None => {
                    slots.insert(id.clone(), ordered.len());
                    ordered.push((id, tokens));
                }
            }
        }
        let mut index = InvertedIndex::default();
        for (id, tokens) in ordered {
            let doc = index.doc_ids.len() as u32;
            index.doc_index.insert(id.clone(), doc);
            index.doc_ids.push(id);
            index.doc_lengths.push(tokens.len() as u64);
            index.collection_length += tokens.len() as u64;
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                index.postings.entry(term.to_string()).or_default().push(Posting { doc, tf: count });
                *index.collection_tf.entry(term.to_string()).or_default() += count as u64;
            }
        }
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn contains_doc(&self, id: &str) -> bool {
        self.doc_index.contains_key(id)
    }

    fn tf(&self, term: &str, doc: u32) -> u32 {
        self.postings
            .get(term)
            .and_then(|p| p.binary_search_by_key(&doc, |p| p.doc).ok().map(|i| p[i].tf))
            .unwrap_or(0)
    }

    /// Checks the collection bookkeeping against the postings.
    pub fn validate(&self) -> bool {
        if self.doc_lengths.iter().sum::<u64>() != self.collection_length {
            return false;
        }
        if self.doc_ids.len() != self.doc_lengths.len() {
            return false;
        }
        for (term, postings) in &self.postings {
            let sum: u64 = postings.iter().map(|p| p.tf as u64).sum();
            if Some(&sum) != self.collection_tf.get(term) {
                return false;
            }
        }
        true
    }

    /// Dirichlet-smoothed log query likelihood of `doc` for the query tokens.
    /// Query terms missing from the whole collection are skipped.
    pub fn lm_score(&self, query: &[String], doc: &str, mu: f64) -> Result<f64> {
        let &doc_id = self
            .doc_index
            .get(doc)
            .ok_or_else(|| Error::UnknownDocument(doc.to_string()))?;
        let dl = self.doc_lengths[doc_id as usize] as f64;
        let mut score = 0.0;
        for term in query {
            let ctf = match self.collection_tf.get(term) {
                Some(&c) => c as f64,
                None => continue,
            };
            let p_c = ctf / self.collection_length as f64;
            let tf = self.tf(term, doc_id) as f64;
            score += ((tf + mu * p_c) / (dl + mu)).ln();
        }
        Ok(score)
    }

    /// Ranks every indexed document by `lm_score`. An empty query (or empty
    /// index) gives an empty list. `n` caps the list length.
    pub fn lm_rank(&self, query: &[String], n: usize, mu: f64) -> RankedList {
        if query.is_empty() || query.iter().all(|t| !self.collection_tf.contains_key(t)) {
            return RankedList::empty();
        }
        let scored: Vec<(String, f64)> = self
            .doc_ids
            .iter()
            .map(|id| {
                let s = self.lm_score(query, id, mu).expect("own doc ids are known");
                (id.clone(), s)
            })
            .collect();
        RankedList::from_scores(scored).truncated(n)
    }

    fn idf(&self, term: &str) -> Option<f64> {
        let df = self.postings.get(term)?.len() as f64;
        let n = self.doc_count() as f64;
        Some((1.0 + (n - df + 0.5) / (df + 0.5)).ln())
    }

    fn avgdl(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.collection_length as f64 / self.doc_count() as f64
        }
    }

    /// BM25 score of one document, summed over query token occurrences.
    pub fn bm25_score(&self, query: &[String], doc: &str, k1: f64, b: f64) -> Result<f64> {
        let &doc_id = self
            .doc_index
            .get(doc)
            .ok_or_else(|| Error::UnknownDocument(doc.to_string()))?;
        let dl = self.doc_lengths[doc_id as usize] as f64;
        let avgdl = self.avgdl();
        let mut score = 0.0;
        for term in query {
            let Some(idf) = self.idf(term) else { continue };
            let tf = self.tf(term, doc_id) as f64;
            if tf == 0.0 {
                continue;
            }
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        Ok(score)
    }

    /// Top-`k` documents by BM25. Only documents containing at least one
    /// query term are scored.
    pub fn bm25_rank(&self, query: &[String], k: usize, k1: f64, b: f64) -> RankedList {
        let mut hit: BTreeMap<u32, ()> = BTreeMap::new();
        for term in query {
            if let Some(postings) = self.postings.get(term) {
                for p in postings {
                    hit.entry(p.doc).or_insert(());
                }
            }
        }
        let scored: Vec<(String, f64)> = hit
            .keys()
            .map(|&doc| {
                let id = self.doc_ids[doc as usize].clone();
                let s = self.bm25_score(query, &id, k1, b).expect("own doc ids are known");
                (id, s)
            })
            .collect();
        RankedList::from_scores(scored).truncated(k)
    }
}

/// Min-max normalizes a ranked list's scores into [0, 1]. With a single score
/// level (max == min) every entry maps to 1.0 so a lone retrieved document
/// still carries full weight.
pub fn normalized_scores(list: &RankedList) -> Vec<(String, f64)> {
    let items = list.items();
    if items.is_empty() {
        return Vec::new();
    }
    let max = items.first().map(|(_, s)| *s).unwrap_or(0.0);
    let min = items.last().map(|(_, s)| *s).unwrap_or(0.0);
    items
        .iter()
        .map(|(id, s)| {
            let norm = if max == min { 1.0 } else { (s - min) / (max - min) };
            (id.clone(), norm)
        })
        .collect()
}
