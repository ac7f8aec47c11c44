//! Iterative table generation.
//!
//! A query is answered in rounds. Round 0 ranks entities and schema labels
//! from the query alone. Each later round re-ranks one subtask using the top
//! results the *other* subtask produced in the previous round, so both sides
//! of round t read only round t-1 snapshots and their order within the round
//! does not matter. After the final round the top entities and labels are
//! truncated to the output size and every cell is filled by value lookup.
//!
//! All shared state lives in [`Resources`], which is immutable once
//! assembled; any number of queries may run against it concurrently.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analyzer::Analyzer;
use crate::config::Config;
use crate::corpus::{EntityStore, TableCorpus};
use crate::entity_ranking::{rank_entities, EntityRankContext, ENTITY_FEATURES};
use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::schema_determination::{
    hits_provider, rank_labels, table_document_tokens, SchemaRankContext, SearchHitsProvider,
    SCHEMA_FEATURES,
};
use crate::schema_norm::{OverrideRule, SynonymSets};
use crate::semantic_match::ModelSet;
use crate::text_index::InvertedIndex;
use crate::value_lookup::{fill_values, Fact, FactCatalog, ValueLookupContext};

/// Everything a query needs, owned in one place.
pub struct Resources {
    pub analyzer: Analyzer,
    pub config: Config,
    pub kb: EntityStore,
    pub corpus: TableCorpus,
    /// Query-likelihood index over entity catchall text, ids = entity ids.
    pub entity_index: InvertedIndex,
    /// BM25 index over whole-table text, ids = table ids.
    pub table_index: InvertedIndex,
    pub synonyms: SynonymSets,
    pub catalog: FactCatalog,
    pub models: ModelSet,
    pub hits: Box<dyn SearchHitsProvider>,
}

impl Resources {
    /// Derives the indexes, synonym groups, and fact catalog from parsed
    /// inputs. The same artifacts can be persisted and reloaded instead of
    /// recomputed; see [`crate::bundle`].
    pub fn assemble(
        kb: EntityStore,
        corpus: TableCorpus,
        models: ModelSet,
        config: Config,
        overrides: &[OverrideRule],
    ) -> Result<Resources> {
        let analyzer = match &config.stopwords_file {
            Some(path) => Analyzer::from_stopword_file(Path::new(path))?,
            None => Analyzer::default(),
        };
        let entity_index =
            InvertedIndex::build(kb.iter().map(|e| (e.id.clone(), analyzer.tokenize(&e.catchall))));
        let table_index = InvertedIndex::build(
            corpus.tables().iter().map(|t| (t.id.clone(), table_document_tokens(t, &analyzer))),
        );
        let synonyms =
            SynonymSets::build(&kb, &analyzer, config.synonym_min_cooccurrence, overrides);
        let catalog = FactCatalog::build(&kb, &corpus, &analyzer);
        let hits = hits_provider(&config)?;
        Ok(Resources {
            analyzer,
            config,
            kb,
            corpus,
            entity_index,
            table_index,
            synonyms,
            catalog,
            models,
            hits,
        })
    }

    pub fn entity_ctx(&self) -> EntityRankContext<'_> {
        EntityRankContext {
            analyzer: &self.analyzer,
            kb: &self.kb,
            corpus: &self.corpus,
            entity_index: &self.entity_index,
            models: &self.models,
            synonyms: &self.synonyms,
            config: &self.config,
        }
    }

    pub fn schema_ctx(&self) -> SchemaRankContext<'_> {
        SchemaRankContext {
            analyzer: &self.analyzer,
            kb: &self.kb,
            corpus: &self.corpus,
            table_index: &self.table_index,
            models: &self.models,
            synonyms: &self.synonyms,
            config: &self.config,
            hits: self.hits.as_ref(),
        }
    }

    pub fn value_ctx(&self) -> ValueLookupContext<'_> {
        ValueLookupContext {
            analyzer: &self.analyzer,
            synonyms: &self.synonyms,
            catalog: &self.catalog,
            table_index: &self.table_index,
            config: &self.config,
        }
    }
}

/// Knobs of a single generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    /// Feedback rounds after round 0.
    pub rounds: usize,
    /// How many top results cross over as feedback each round.
    pub k_feedback: usize,
    /// Entity rows in the rendered table.
    pub n_out: usize,
    /// Label columns in the rendered table.
    pub m_out: usize,
    pub entity_weights: Vec<f64>,
    pub schema_weights: Vec<f64>,
}

impl GenerationParams {
    /// Sizes from the config, uniform feature weights.
    pub fn from_config(config: &Config) -> GenerationParams {
        GenerationParams {
            rounds: config.rounds,
            k_feedback: config.k_feedback,
            n_out: config.n_out,
            m_out: config.m_out,
            entity_weights: vec![1.0; ENTITY_FEATURES],
            schema_weights: vec![1.0; SCHEMA_FEATURES],
        }
    }
}

/// The answer to one query: final rankings, the rendered table slice with a
/// provenance-tracked fact per resolved cell, and the per-round snapshots the
/// rankings went through (index 0 = query-only round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTable {
    pub query: String,
    /// Final entity ranking, full candidate list.
    pub entities: RankedList,
    /// Final label ranking, full candidate list.
    pub labels: RankedList,
    /// Entity ids rendered as rows: the top `n_out` of `entities`.
    pub rows: Vec<String>,
    /// Labels rendered as columns: the top `m_out` of `labels`.
    pub columns: Vec<String>,
    /// `rows.len()` by `columns.len()`; `None` where no fact matched.
    pub values: Vec<Vec<Option<Fact>>>,
    pub rounds_executed: usize,
    /// Entity ranking after each round; `entity_rounds[t]` is round t.
    pub entity_rounds: Vec<RankedList>,
    /// Label ranking after each round, aligned with `entity_rounds`.
    pub label_rounds: Vec<RankedList>,
}

impl GeneratedTable {
    /// One self-contained JSON record. Cells list only resolved values, each
    /// with its row/column position and the provenance of the fact.
    pub fn to_json(&self) -> serde_json::Value {
        let mut cells = Vec::new();
        for (i, row) in self.values.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(fact) = cell {
                    cells.push(json!({
                        "row": i,
                        "col": j,
                        "value": fact.value.text(),
                        "provenance": fact.provenance.label(),
                    }));
                }
            }
        }
        json!({
            "query": self.query,
            "entities": self.rows,
            "schema": self.columns,
            "cells": cells,
        })
    }

    /// Tab-separated table with fields space-padded to per-column width, so
    /// it both lines up in a terminal and splits cleanly on tabs.
    pub fn to_tsv(&self) -> String {
        let header: Vec<String> = std::iter::once("entity".to_string())
            .chain(self.columns.iter().cloned())
            .collect();
        let mut grid = vec![header];
        for (i, id) in self.rows.iter().enumerate() {
            let mut line = vec![id.clone()];
            for cell in &self.values[i] {
                line.push(cell.as_ref().map(|f| f.value.text().to_string()).unwrap_or_default());
            }
            grid.push(line);
        }
        let n_cols = grid[0].len();
        let widths: Vec<usize> = (0..n_cols)
            .map(|c| grid.iter().map(|line| line[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &grid {
            for (c, field) in line.iter().enumerate() {
                if c > 0 {
                    out.push('\t');
                }
                if c + 1 < n_cols {
                    out.push_str(&format!("{:<width$}", field, width = widths[c]));
                } else {
                    out.push_str(field);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Ground truth standing in for one subtask's feedback.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleFeedback {
    /// True schema labels assist entity ranking; labels rank without feedback.
    Labels(Vec<String>),
    /// True core entities assist schema determination; entities rank without
    /// feedback.
    Entities(Vec<String>),
}

fn in_round(round: usize) -> impl FnOnce(Error) -> Error {
    move |source| Error::Round { round, source: Box::new(source) }
}

/// Runs the full loop: round 0 from the query alone, then `params.rounds`
/// feedback rounds, then value lookup over the truncated output lists.
pub fn generate_table(
    res: &Resources,
    query: &str,
    params: &GenerationParams,
) -> Result<GeneratedTable> {
    let e_ctx = res.entity_ctx();
    let s_ctx = res.schema_ctx();
    let mut entity_rounds = Vec::with_capacity(params.rounds + 1);
    let mut label_rounds = Vec::with_capacity(params.rounds + 1);

    let e0 = rank_entities(&e_ctx, query, &[], &params.entity_weights).map_err(in_round(0))?;
    let s0 = rank_labels(&s_ctx, query, &[], &params.schema_weights).map_err(in_round(0))?;
    entity_rounds.push(e0);
    label_rounds.push(s0);

    for t in 1..=params.rounds {
        let label_feedback = label_rounds[t - 1].top_ids(params.k_feedback);
        let entity_feedback = entity_rounds[t - 1].top_ids(params.k_feedback);
        let e = rank_entities(&e_ctx, query, &label_feedback, &params.entity_weights)
            .map_err(in_round(t))?;
        let s = rank_labels(&s_ctx, query, &entity_feedback, &params.schema_weights)
            .map_err(in_round(t))?;
        entity_rounds.push(e);
        label_rounds.push(s);
    }
    finish(res, query, params, entity_rounds, label_rounds)
}

/// One pass where ground truth plays the role of the other subtask's
/// feedback. This is the evaluation upper bound for feedback quality: the
/// assisted subtask sees perfect input instead of its sibling's round t-1
/// output. The unassisted side runs query-only.
pub fn generate_table_oracle(
    res: &Resources,
    query: &str,
    params: &GenerationParams,
    feedback: &OracleFeedback,
) -> Result<GeneratedTable> {
    let (entity_rounds, label_rounds) = match feedback {
        OracleFeedback::Labels(labels) => {
            if labels.is_empty() {
                return Err(Error::MissingGroundTruth);
            }
            let e = rank_entities(&res.entity_ctx(), query, labels, &params.entity_weights)?;
            let s = rank_labels(&res.schema_ctx(), query, &[], &params.schema_weights)?;
            (vec![e], vec![s])
        }
        OracleFeedback::Entities(ids) => {
            if ids.is_empty() {
                return Err(Error::MissingGroundTruth);
            }
            let s = rank_labels(&res.schema_ctx(), query, ids, &params.schema_weights)?;
            let e = rank_entities(&res.entity_ctx(), query, &[], &params.entity_weights)?;
            (vec![e], vec![s])
        }
    };
    finish(res, query, params, entity_rounds, label_rounds)
}

fn finish(
    res: &Resources,
    query: &str,
    params: &GenerationParams,
    entity_rounds: Vec<RankedList>,
    label_rounds: Vec<RankedList>,
) -> Result<GeneratedTable> {
    let entities = entity_rounds.last().expect("at least round 0").clone();
    let labels = label_rounds.last().expect("at least round 0").clone();
    let rows = entities.top_ids(params.n_out);
    let columns = labels.top_ids(params.m_out);
    let q_tokens = res.analyzer.tokenize(query);
    let values = fill_values(&res.value_ctx(), &q_tokens, &rows, &columns);
    Ok(GeneratedTable {
        query: query.to_string(),
        entities,
        labels,
        rows,
        columns,
        values,
        rounds_executed: entity_rounds.len() - 1,
        entity_rounds,
        label_rounds,
    })
}

/// Convenience wrapper owning the resources.
pub struct Engine {
    resources: Resources,
}

impl Engine {
    pub fn new(resources: Resources) -> Engine {
        Engine { resources }
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    pub fn generate(&self, query: &str, params: &GenerationParams) -> Result<GeneratedTable> {
        generate_table(&self.resources, query, params)
    }

    pub fn generate_oracle(
        &self,
        query: &str,
        params: &GenerationParams,
        feedback: &OracleFeedback,
    ) -> Result<GeneratedTable> {
        generate_table_oracle(&self.resources, query, params, feedback)
    }
}
