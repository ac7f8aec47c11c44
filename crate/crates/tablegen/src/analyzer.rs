//! Shared text analyzer.
//!
//! Every component (queries, entity text, table text, labels) tokenizes
//! through the same analyzer so token streams stay comparable: lowercase,
//! split on runs of non-alphanumeric characters, drop empty tokens and
//! stopwords. The stopword list is replaceable by a plain text file with one
//! word per line.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::Result;

/// Standard English stopword list used when no file is supplied.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone)]
pub struct Analyzer {
    stopwords: BTreeSet<String>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer::with_stopwords(DEFAULT_STOPWORDS.iter().copied())
    }
}

impl Analyzer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Analyzer {
            stopwords: words.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }

    /// Loads a stopword file: one word per line, blank lines ignored.
    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut words = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let word = line.trim();
            if !word.is_empty() {
                words.push(word.to_string());
            }
        }
        Ok(Analyzer::with_stopwords(words))
    }

    /// Lowercases, splits on non-alphanumeric runs, drops empties and stopwords.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && !self.stopwords.contains(*t))
            .map(|t| t.to_string())
            .collect()
    }

    /// Canonical single-string form of a label: tokens joined by one space.
    ///
    /// This performs lowercasing, stopword removal, and whitespace collapse in
    /// one step, so `"Date of Birth"` and `"date  birth"` normalize alike.
    pub fn normalize_label(&self, label: &str) -> String {
        self.tokenize(label).join(" ")
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn stopwords(&self) -> impl Iterator<Item = &str> {
        self.stopwords.iter().map(|s| s.as_str())
    }
}
