//! Scored candidate lists.
//!
//! A [`RankedList`] keeps (id, score) pairs sorted by descending score with
//! ties broken by ascending id, so every ranking in the crate is total and
//! reproducible regardless of input order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    items: Vec<(String, f64)>,
}

impl RankedList {
    pub fn empty() -> Self {
        RankedList { items: Vec::new() }
    }

    /// Sorts the given scores into rank order: score descending, id ascending.
    pub fn from_scores(mut items: Vec<(String, f64)>) -> Self {
        items.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedList { items }
    }

    pub fn items(&self) -> &[(String, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Ids of the first `k` items (fewer if the list is shorter).
    pub fn top_ids(&self, k: usize) -> Vec<String> {
        self.items.iter().take(k).map(|(id, _)| id.clone()).collect()
    }

    /// A copy cut down to the first `k` items.
    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList { items: self.items.iter().take(k).cloned().collect() }
    }

    /// Zero-based rank of `id`, if present.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|(i, _)| i == id)
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.items.iter().find(|(i, _)| i == id).map(|(_, s)| *s)
    }
}
