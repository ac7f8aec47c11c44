//! Label normalization, edit-distance similarity, and synonym discovery.
//!
//! Two labels match when their normalized forms map to the same canonical
//! synonym representative or when their edit similarity reaches a threshold.
//! Edit similarity is `1 - lev(a, b) / max(|a|, |b|)` computed on normalized
//! labels (lowercased, stopwords dropped, whitespace collapsed); two empty
//! strings count as identical.
//!
//! Synonym groups come from the knowledge base: two property labels land in
//! one group when they share a value on enough distinct (entity, value)
//! pairs. Groups are closed under transitive union, and an allow/deny
//! override list can force or forbid individual pairs.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::analyzer::Analyzer;
use crate::corpus::EntityStore;
use crate::error::{Error, Result};

/// Levenshtein distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized edit similarity in [0, 1] between two labels.
pub fn edit_similarity(analyzer: &Analyzer, a: &str, b: &str) -> f64 {
    let a = analyzer.normalize_label(a);
    let b = analyzer.normalize_label(b);
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / max_len as f64
}

/// One line of the synonym override file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OverrideRule {
    Allow(String, String),
    Deny(String, String),
}

/// Parses override lines of the form `allow<TAB>labelA<TAB>labelB` or
/// `deny<TAB>labelA<TAB>labelB`.
pub fn parse_overrides<R: BufRead>(reader: R) -> Result<Vec<OverrideRule>> {
    let mut rules = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let rule = match fields[0] {
            "allow" => OverrideRule::Allow(fields[1].to_string(), fields[2].to_string()),
            "deny" => OverrideRule::Deny(fields[1].to_string(), fields[2].to_string()),
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected allow or deny, got `{other}`"),
                })
            }
        };
        rules.push(rule);
    }
    Ok(rules)
}

/// Groups of interchangeable normalized labels with a canonical member each.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynonymSets {
    /// Sorted label groups (each sorted internally; canonical = first member).
    groups: Vec<Vec<String>>,
    canonical: BTreeMap<String, String>,
}

impl SynonymSets {
    pub fn empty() -> SynonymSets {
        SynonymSets::default()
    }

    /// Mines synonym groups from shared property values.
    ///
    /// Two normalized labels are joined when at least `min_cooccurrence`
    /// distinct (entity, value) pairs carry both labels. Overrides are applied
    /// to the pair graph before the transitive closure: denied pairs lose
    /// their direct edge, allowed pairs gain one.
    pub fn build(
        kb: &EntityStore,
        analyzer: &Analyzer,
        min_cooccurrence: usize,
        overrides: &[OverrideRule],
    ) -> SynonymSets {
        // Count distinct (entity, value) pairs shared by each label pair.
        let mut cooc: BTreeMap<(String, String), usize> = BTreeMap::new();
        for entity in kb.iter() {
            let mut normalized: Vec<(String, &Vec<String>)> = entity
                .properties
                .iter()
                .map(|(label, values)| (analyzer.normalize_label(label), values))
                .collect();
            normalized.sort_by(|a, b| a.0.cmp(&b.0));
            for i in 0..normalized.len() {
                for j in (i + 1)..normalized.len() {
                    let (ref la, va) = normalized[i];
                    let (ref lb, vb) = normalized[j];
                    if la == lb {
                        continue;
                    }
                    // Distinct values shared by both labels on this entity.
                    let shared: std::collections::BTreeSet<&String> = va
                        .iter()
                        .filter(|v| vb.contains(v))
                        .collect();
                    if !shared.is_empty() {
                        *cooc.entry((la.clone(), lb.clone())).or_default() += shared.len();
                    }
                }
            }
        }

        let norm_pair = |a: &str, b: &str| {
            let (a, b) = (analyzer.normalize_label(a), analyzer.normalize_label(b));
            if a <= b { (a, b) } else { (b, a) }
        };
        let mut edges: Vec<(String, String)> = cooc
            .into_iter()
            .filter(|&(_, n)| n >= min_cooccurrence)
            .map(|(pair, _)| pair)
            .collect();
        for rule in overrides {
            match rule {
                OverrideRule::Deny(a, b) => {
                    let key = norm_pair(a, b);
                    edges.retain(|e| *e != key);
                }
                OverrideRule::Allow(a, b) => {
                    let key = norm_pair(a, b);
                    if key.0 != key.1 && !edges.contains(&key) {
                        edges.push(key);
                    }
                }
            }
        }

        // Transitive closure via union-find over the labels that have edges.
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        for (a, b) in &edges {
            let n = ids.len();
            ids.entry(a.clone()).or_insert(n);
            let n = ids.len();
            ids.entry(b.clone()).or_insert(n);
        }
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for (a, b) in &edges {
            let (ra, rb) = (find(&mut parent, ids[a]), find(&mut parent, ids[b]));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut grouped: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (label, &id) in &ids {
            grouped.entry(find(&mut parent, id)).or_default().push(label.clone());
        }
        let mut groups: Vec<Vec<String>> = grouped
            .into_values()
            .map(|mut g| {
                g.sort();
                g
            })
            .collect();
        groups.sort();

        let mut canonical = BTreeMap::new();
        for g in &groups {
            for label in g {
                canonical.insert(label.clone(), g[0].clone());
            }
        }
        SynonymSets { groups, canonical }
    }

    /// The canonical representative of a normalized label (itself if ungrouped).
    pub fn canonical<'a>(&'a self, normalized_label: &'a str) -> &'a str {
        self.canonical.get(normalized_label).map(String::as_str).unwrap_or(normalized_label)
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }
}

/// Whether two labels are interchangeable: same canonical synonym
/// representative, or edit similarity at or above `delta`.
pub fn labels_match(
    analyzer: &Analyzer,
    synonyms: &SynonymSets,
    a: &str,
    b: &str,
    delta: f64,
) -> bool {
    let na = analyzer.normalize_label(a);
    let nb = analyzer.normalize_label(b);
    if synonyms.canonical(&na) == synonyms.canonical(&nb) {
        return true;
    }
    edit_similarity(analyzer, &na, &nb) >= delta
}
