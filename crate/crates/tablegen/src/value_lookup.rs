//! Entity-oriented fact catalog and value resolution.
//!
//! The catalog gathers every (entity, label, value) triple the sources offer:
//! knowledge-base properties first, then table cells read off every
//! relational table in (table, row, column) order. Resolving a cell of the
//! generated table picks one traceable source: the knowledge base always
//! wins, and among tables the one most relevant to the query does. Every
//! returned fact can be re-fetched from its provenance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analyzer::Analyzer;
use crate::config::Config;
use crate::corpus::{Cell, EntityStore, TableCorpus};
use crate::schema_norm::{labels_match, SynonymSets};
use crate::text_index::InvertedIndex;

/// Where a fact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Kb,
    Table(String),
}

impl Provenance {
    /// Short rendering for output records: `kb` or `table:<id>`.
    pub fn label(&self) -> String {
        match self {
            Provenance::Kb => "kb".to_string(),
            Provenance::Table(id) => format!("table:{id}"),
        }
    }
}

/// One (label, value, provenance) triple of some entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    /// The label exactly as the source spells it.
    pub label: String,
    /// Normalized form used for matching.
    pub norm_label: String,
    pub value: Cell,
    pub provenance: Provenance,
}

/// All facts grouped per entity. Within an entity, knowledge-base facts come
/// first (property order, then value order), followed by table facts in
/// (table, row, column) order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactCatalog {
    by_entity: BTreeMap<String, Vec<Fact>>,
}

impl FactCatalog {
    pub fn build(kb: &EntityStore, corpus: &TableCorpus, analyzer: &Analyzer) -> FactCatalog {
        let mut by_entity: BTreeMap<String, Vec<Fact>> = BTreeMap::new();
        for e in kb.iter() {
            let facts = by_entity.entry(e.id.clone()).or_default();
            for (label, values) in &e.properties {
                for v in values {
                    facts.push(Fact {
                        label: label.clone(),
                        norm_label: analyzer.normalize_label(label),
                        value: Cell::Literal(v.clone()),
                        provenance: Provenance::Kb,
                    });
                }
            }
        }
        for t in corpus.tables() {
            for row in &t.rows {
                let Cell::EntityRef(e) = &row[t.core_column] else { continue };
                for (c, cell) in row.iter().enumerate() {
                    if c == t.core_column || cell.is_blank() {
                        continue;
                    }
                    let label = &t.headings[c];
                    by_entity.entry(e.clone()).or_default().push(Fact {
                        label: label.clone(),
                        norm_label: analyzer.normalize_label(label),
                        value: cell.clone(),
                        provenance: Provenance::Table(t.id.clone()),
                    });
                }
            }
        }
        FactCatalog { by_entity }
    }

    /// The entity's facts, empty for unknown entities.
    pub fn facts(&self, entity: &str) -> &[Fact] {
        self.by_entity.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entity_count(&self) -> usize {
        self.by_entity.len()
    }

    pub fn fact_count(&self) -> usize {
        self.by_entity.values().map(Vec::len).sum()
    }
}

/// Read-only state value resolution draws on.
pub struct ValueLookupContext<'a> {
    pub analyzer: &'a Analyzer,
    pub synonyms: &'a SynonymSets,
    pub catalog: &'a FactCatalog,
    /// Same table index the schema side retrieves against.
    pub table_index: &'a InvertedIndex,
    pub config: &'a Config,
}

/// Resolves the value of one (entity, label) cell.
///
/// Among the entity's facts whose label matches, a knowledge-base fact always
/// wins (the first in catalog order). Otherwise the fact from the table most
/// relevant to the query wins, ties broken by table id and then catalog
/// order.
pub fn lookup_value(
    ctx: &ValueLookupContext,
    query_tokens: &[String],
    entity: &str,
    label: &str,
) -> Option<Fact> {
    let matching: Vec<&Fact> = ctx
        .catalog
        .facts(entity)
        .iter()
        .filter(|f| {
            labels_match(ctx.analyzer, ctx.synonyms, &f.norm_label, label, ctx.config.delta)
        })
        .collect();
    if let Some(kb_fact) = matching.iter().find(|f| f.provenance == Provenance::Kb) {
        return Some((*kb_fact).clone());
    }
    let mut best: Option<(&Fact, &str, f64)> = None;
    for fact in matching {
        let Provenance::Table(id) = &fact.provenance else { continue };
        let score = match ctx.table_index.bm25_score(
            query_tokens,
            id,
            ctx.config.bm25_k1,
            ctx.config.bm25_b,
        ) {
            Ok(s) => s,
            Err(_) => {
                log::warn!("fact references table `{id}` missing from the index");
                0.0
            }
        };
        let replace = match &best {
            None => true,
            Some((_, best_id, best_score)) => {
                score > *best_score || (score == *best_score && id.as_str() < *best_id)
            }
        };
        if replace {
            best = Some((fact, id, score));
        }
    }
    best.map(|(f, _, _)| f.clone())
}

/// Fills the output value matrix: one optional fact per (entity, label) cell.
pub fn fill_values(
    ctx: &ValueLookupContext,
    query_tokens: &[String],
    entities: &[String],
    labels: &[String],
) -> Vec<Vec<Option<Fact>>> {
    entities
        .iter()
        .map(|e| {
            labels
                .iter()
                .map(|s| lookup_value(ctx, query_tokens, e, s))
                .collect()
        })
        .collect()
}

/// Re-reads a fact from its provenance. Some(value) confirms the source still
/// carries exactly this value for this entity and label; None means it does
/// not, so the fact is stale or fabricated.
pub fn refetch(
    fact: &Fact,
    entity: &str,
    kb: &EntityStore,
    corpus: &TableCorpus,
) -> Option<Cell> {
    match &fact.provenance {
        Provenance::Kb => {
            let values = kb.get(entity)?.properties.get(&fact.label)?;
            values
                .iter()
                .find(|v| matches!(&fact.value, Cell::Literal(x) if x == *v))
                .map(|v| Cell::Literal(v.clone()))
        }
        Provenance::Table(id) => {
            let t = corpus.get(id)?;
            for row in &t.rows {
                if !matches!(&row[t.core_column], Cell::EntityRef(e) if e == entity) {
                    continue;
                }
                for (c, cell) in row.iter().enumerate() {
                    if c != t.core_column && t.headings[c] == fact.label && cell == &fact.value {
                        return Some(cell.clone());
                    }
                }
            }
            None
        }
    }
}
