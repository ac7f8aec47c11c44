//! Engine configuration.
//!
//! All tunable constants live here with their reference defaults. Values can
//! be loaded from a flat `key = value` text file and overridden individually,
//! which is how the command line layers `--set key=value` style flags on top
//! of a config file.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Dirichlet smoothing parameter for query-likelihood scoring.
    pub mu: f64,
    /// Label-match threshold on edit similarity.
    pub delta: f64,
    /// Threshold on edit similarity for counting a label as present in a table.
    pub gamma: f64,
    /// How many items from the other subtask feed back into each round.
    pub k_feedback: usize,
    /// Feedback rounds run after round 0.
    pub rounds: usize,
    /// Entity candidate pool size (query-likelihood retrieval depth).
    pub candidate_entities: usize,
    /// Label candidate pool size (column population depth).
    pub candidate_labels: usize,
    /// Table retrieval depth for column population and value lookup.
    pub table_k: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    /// Optimizer step size for semantic matcher training.
    pub learning_rate: f64,
    /// Training epochs for the semantic matcher.
    pub epochs: usize,
    /// Hinge margin for pairwise training.
    pub margin: f64,
    /// Word embedding dimensionality for trained-from-scratch tables.
    pub embedding_dim: usize,
    /// Number of strongest matching signals kept per input pair.
    pub k_signals: usize,
    /// Hidden layer widths of the matching network.
    pub hidden1: usize,
    pub hidden2: usize,
    /// Minimum distinct (entity, value) co-occurrences before two property
    /// labels are merged into one synonym group.
    pub synonym_min_cooccurrence: usize,
    /// Rows and columns of the rendered output table.
    pub n_out: usize,
    pub m_out: usize,
    /// Hit-count threshold above which a label/entity pair counts as searched-for.
    pub sh_threshold: u64,
    /// Component weights inside attribute retrieval: match, drel, sh, kb.
    pub ar_weights: [f64; 4],
    /// RNG seed for everything stochastic (init, sampling, shuffling).
    pub seed: u64,
    /// Search-hits provider: "null" (always zero) or "file".
    pub provider: String,
    pub hits_file: Option<String>,
    pub stopwords_file: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mu: 2000.0,
            delta: 0.8,
            gamma: 0.8,
            k_feedback: 10,
            rounds: 3,
            candidate_entities: 100,
            candidate_labels: 100,
            table_k: 100,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            learning_rate: 0.0001,
            epochs: 50,
            margin: 1.0,
            embedding_dim: 50,
            k_signals: 50,
            hidden1: 50,
            hidden2: 20,
            synonym_min_cooccurrence: 3,
            n_out: 10,
            m_out: 5,
            sh_threshold: 1_000_000,
            ar_weights: [1.0, 1.0, 1.0, 1.0],
            seed: 42,
            provider: "null".to_string(),
            hits_file: None,
            stopwords_file: None,
        }
    }
}

impl Config {
    /// Parses a flat `key = value` file. `#` starts a comment; blank lines are
    /// ignored; string values may be double-quoted.
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{raw}`"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
        }
        Ok(config)
    }

    /// Applies one `key = value` override. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim().trim_matches('"');
        let bad = |what: &str| Error::Config(format!("bad value `{value}` for `{what}`"));
        match key {
            "mu" => self.mu = value.parse().map_err(|_| bad(key))?,
            "delta" => self.delta = value.parse().map_err(|_| bad(key))?,
            "gamma" => self.gamma = value.parse().map_err(|_| bad(key))?,
            "k_feedback" => self.k_feedback = value.parse().map_err(|_| bad(key))?,
            "rounds" => self.rounds = value.parse().map_err(|_| bad(key))?,
            "candidate_entities" => self.candidate_entities = value.parse().map_err(|_| bad(key))?,
            "candidate_labels" => self.candidate_labels = value.parse().map_err(|_| bad(key))?,
            "table_k" => self.table_k = value.parse().map_err(|_| bad(key))?,
            "bm25_k1" => self.bm25_k1 = value.parse().map_err(|_| bad(key))?,
            "bm25_b" => self.bm25_b = value.parse().map_err(|_| bad(key))?,
            "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad(key))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad(key))?,
            "margin" => self.margin = value.parse().map_err(|_| bad(key))?,
            "embedding_dim" => self.embedding_dim = value.parse().map_err(|_| bad(key))?,
            "k_signals" => self.k_signals = value.parse().map_err(|_| bad(key))?,
            "hidden1" => self.hidden1 = value.parse().map_err(|_| bad(key))?,
            "hidden2" => self.hidden2 = value.parse().map_err(|_| bad(key))?,
            "synonym_min_cooccurrence" => {
                self.synonym_min_cooccurrence = value.parse().map_err(|_| bad(key))?
            }
            "n_out" => self.n_out = value.parse().map_err(|_| bad(key))?,
            "m_out" => self.m_out = value.parse().map_err(|_| bad(key))?,
            "sh_threshold" => self.sh_threshold = value.parse().map_err(|_| bad(key))?,
            "ar_w_match" => self.ar_weights[0] = value.parse().map_err(|_| bad(key))?,
            "ar_w_drel" => self.ar_weights[1] = value.parse().map_err(|_| bad(key))?,
            "ar_w_sh" => self.ar_weights[2] = value.parse().map_err(|_| bad(key))?,
            "ar_w_kb" => self.ar_weights[3] = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "provider" => match value {
                "null" | "file" => self.provider = value.to_string(),
                _ => return Err(Error::Config(format!("unknown provider `{value}`"))),
            },
            "hits_file" => self.hits_file = Some(value.to_string()),
            "stopwords_file" => self.stopwords_file = Some(value.to_string()),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_carry_reference_values() {
        let c = Config::default();
        assert_eq!(c.mu, 2000.0);
        assert_eq!(c.delta, 0.8);
        assert_eq!(c.gamma, 0.8);
        assert_eq!(c.k_feedback, 10);
        assert_eq!(c.rounds, 3);
        assert_eq!(c.candidate_entities, 100);
        assert_eq!(c.candidate_labels, 100);
        assert_eq!(c.learning_rate, 0.0001);
        assert_eq!(c.epochs, 50);
        assert_eq!(c.n_out, 10);
        assert_eq!(c.m_out, 5);
    }

    #[test]
    fn file_values_override_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nmu = 500\nrounds = 1\nprovider = \"file\"").unwrap();
        let c = Config::from_file(f.path()).unwrap();
        assert_eq!(c.mu, 500.0);
        assert_eq!(c.rounds, 1);
        assert_eq!(c.provider, "file");
        assert_eq!(c.delta, 0.8);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = Config::default();
        assert!(c.set("not_a_key", "1").is_err());
        assert!(c.set("provider", "web").is_err());
    }
}
