//! Schema label ranking.
//!
//! Candidate heading labels are mined from the tables most relevant to the
//! query (and, once entity feedback exists, from tables and properties of the
//! feedback entities). Five features score each candidate:
//!
//! | #   | signal                                                        |
//! |-----|---------------------------------------------------------------|
//! | φ1  | column population: relevance mass of tables carrying the label |
//! | φ2  | entity-enhanced column population (coverage-weighted)          |
//! | φ3  | semantic match, query vs label                                 |
//! | φ4  | attribute retrieval (cell match + table rank + hits + property) |
//! | φ5  | entity compatibility (mean column of the compatibility matrix) |
//!
//! Round 0 has no entity feedback, so φ2, φ4 and φ5 are exactly zero. As in
//! entity ranking, features are min-max normalized per query before the
//! weighted combination.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use crate::analyzer::Analyzer;
use crate::config::Config;
use crate::corpus::{Cell, EntityRepr, EntityStore, RelationalTable, TableCorpus};
use crate::entity_ranking::{match_kb, rank_by_features, CompatibilityMatrix};
use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::schema_norm::{edit_similarity, labels_match, SynonymSets};
use crate::semantic_match::{MatcherKind, ModelSet};
use crate::text_index::{normalized_scores, InvertedIndex};

pub const SCHEMA_FEATURES: usize = 5;

/// Hit counts for "⟨label⟩ of ⟨entity⟩" style lookups, abstracted so tests
/// and offline runs need no network.
pub trait SearchHitsProvider: Send + Sync {
    fn hits(&self, label: &str, entity: &str) -> u64;
}

/// Always zero: the offline default.
pub struct NullHitsProvider;

impl SearchHitsProvider for NullHitsProvider {
    fn hits(&self, _label: &str, _entity: &str) -> u64 {
        0
    }
}

/// Hit counts from a `label<TAB>entity<TAB>count` fixture file. Lookups are
/// exact string matches, so store normalized labels.
pub struct FileHitsProvider {
    counts: BTreeMap<(String, String), u64>,
}

impl FileHitsProvider {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<FileHitsProvider> {
        let mut counts = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = (fields.len() == 3).then(|| fields[2].trim().parse::<u64>().ok()).flatten();
            match parsed {
                Some(count) => {
                    counts.insert((fields[0].to_string(), fields[1].to_string()), count);
                }
                None => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected `label<TAB>entity<TAB>count`, got `{line}`"),
                    })
                }
            }
        }
        Ok(FileHitsProvider { counts })
    }

    pub fn from_file(path: &Path) -> Result<FileHitsProvider> {
        let file = std::fs::File::open(path)?;
        FileHitsProvider::from_reader(std::io::BufReader::new(file))
    }
}

impl SearchHitsProvider for FileHitsProvider {
    fn hits(&self, label: &str, entity: &str) -> u64 {
        self.counts
            .get(&(label.to_string(), entity.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

/// Builds the provider selected by the config.
pub fn hits_provider(config: &Config) -> Result<Box<dyn SearchHitsProvider>> {
    match config.provider.as_str() {
        "null" => Ok(Box::new(NullHitsProvider)),
        "file" => {
            let path = config.hits_file.as_ref().ok_or_else(|| {
                Error::Config("provider `file` needs `hits_file` set".to_string())
            })?;
            Ok(Box::new(FileHitsProvider::from_file(Path::new(path))?))
        }
        other => Err(Error::Config(format!("unknown provider `{other}`"))),
    }
}

/// All text of a table as one retrieval document: caption, page title,
/// headings, then cell text in row order.
pub fn table_document_tokens(table: &RelationalTable, analyzer: &Analyzer) -> Vec<String> {
    let mut tokens = analyzer.tokenize(&table.caption);
    tokens.extend(analyzer.tokenize(&table.page_title));
    for h in &table.headings {
        tokens.extend(analyzer.tokenize(h));
    }
    for row in &table.rows {
        for cell in row {
            tokens.extend(analyzer.tokenize(cell.text()));
        }
    }
    tokens
}

/// Whether table `t` carries label `s`: 1 if the best edit similarity
/// against the table's headings reaches `gamma`.
pub fn p_s_given_t(analyzer: &Analyzer, label: &str, table: &RelationalTable, gamma: f64) -> f64 {
    let best = table
        .headings
        .iter()
        .map(|h| edit_similarity(analyzer, label, h))
        .fold(0.0, f64::max);
    if best >= gamma {
        1.0
    } else {
        0.0
    }
}

/// Read-only state schema ranking draws on.
pub struct SchemaRankContext<'a> {
    pub analyzer: &'a Analyzer,
    pub kb: &'a EntityStore,
    pub corpus: &'a TableCorpus,
    /// BM25 index over whole-table text, ids = table ids.
    pub table_index: &'a InvertedIndex,
    pub models: &'a ModelSet,
    pub synonyms: &'a SynonymSets,
    pub config: &'a Config,
    pub hits: &'a dyn SearchHitsProvider,
}

impl SchemaRankContext<'_> {
    /// Top tables for the query with min-max normalized relevance.
    fn retrieve_tables(&self, query_tokens: &[String]) -> Vec<(&RelationalTable, f64)> {
        let ranked = self.table_index.bm25_rank(
            query_tokens,
            self.config.table_k,
            self.config.bm25_k1,
            self.config.bm25_b,
        );
        normalized_scores(&ranked)
            .into_iter()
            .filter_map(|(id, rel)| match self.corpus.get(&id) {
                Some(t) => Some((t, rel)),
                None => {
                    log::warn!("table `{id}` is indexed but missing from the corpus");
                    None
                }
            })
            .collect()
    }
}

fn cp_score(
    analyzer: &Analyzer,
    label: &str,
    tables: &[(&RelationalTable, f64)],
    gamma: f64,
) -> f64 {
    tables
        .iter()
        .map(|(t, rel)| p_s_given_t(analyzer, label, t, gamma) * rel)
        .sum()
}

/// Labels of the query's top tables, scored by the relevance mass of the
/// tables carrying them. Empty retrieval gives an empty result.
pub fn column_population(ctx: &SchemaRankContext, query_tokens: &[String]) -> RankedList {
    let tables = ctx.retrieve_tables(query_tokens);
    let candidates = candidate_labels_from_tables(ctx.analyzer, &tables);
    let scored = candidates
        .into_iter()
        .map(|s| {
            let score = cp_score(ctx.analyzer, &s, &tables, ctx.config.gamma);
            (s, score)
        })
        .collect();
    RankedList::from_scores(scored)
}

fn candidate_labels_from_tables(
    analyzer: &Analyzer,
    tables: &[(&RelationalTable, f64)],
) -> BTreeSet<String> {
    tables
        .iter()
        .flat_map(|(t, _)| t.headings.iter())
        .map(|h| analyzer.normalize_label(h))
        .filter(|l| !l.is_empty())
        .collect()
}

/// Column population weighted by how much of the feedback entity set each
/// table's core column covers.
pub fn entity_enhanced_cp(
    ctx: &SchemaRankContext,
    query_tokens: &[String],
    feedback_entities: &[String],
) -> Result<RankedList> {
    if feedback_entities.is_empty() {
        return Err(Error::EmptyFeedback("entity-enhanced column population needs entities"));
    }
    let tables = ctx.retrieve_tables(query_tokens);
    let weighted: Vec<(&RelationalTable, f64)> = tables
        .iter()
        .map(|(t, rel)| (*t, rel * entity_coverage(t, feedback_entities)))
        .collect();
    let candidates = candidate_labels_from_tables(ctx.analyzer, &tables);
    let scored = candidates
        .into_iter()
        .map(|s| {
            let score = cp_score(ctx.analyzer, &s, &weighted, ctx.config.gamma);
            (s, score)
        })
        .collect();
    Ok(RankedList::from_scores(scored))
}

/// Fraction of the feedback entities sitting in the table's core column.
fn entity_coverage(table: &RelationalTable, entities: &[String]) -> f64 {
    if entities.is_empty() {
        return 0.0;
    }
    let covered = entities.iter().filter(|e| table.core_entities.contains(e)).count();
    covered as f64 / entities.len() as f64
}

fn tf_map(tokens: &[String]) -> BTreeMap<&str, f64> {
    let mut map: BTreeMap<&str, f64> = BTreeMap::new();
    for t in tokens {
        *map.entry(t.as_str()).or_default() += 1.0;
    }
    map
}

fn cosine_tf(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(t, x)| b.get(t).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// The cell-level evidence that `label` describes `entity` in table `t`:
/// strongest cosine between the entity's description and any cell, minus the
/// strongest cosine over the shadow cells (the entity's own rows plus the
/// column whose heading best matches the label). Positive means the entity's
/// text resonates with cells outside the trivially related ones.
fn cell_match_score(
    ctx: &SchemaRankContext,
    table: &RelationalTable,
    label: &str,
    entity: &str,
) -> f64 {
    let desc_tokens = match ctx.kb.get(entity) {
        Some(e) => e.representation(EntityRepr::Description, ctx.analyzer),
        None => return 0.0,
    };
    let desc = tf_map(&desc_tokens);
    if desc.is_empty() {
        return 0.0;
    }

    // The column to shadow: best label match at or above delta, leftmost on ties.
    let mut shadow_col: Option<usize> = None;
    let mut best_sim = f64::NEG_INFINITY;
    for (c, h) in table.headings.iter().enumerate() {
        if labels_match(ctx.analyzer, ctx.synonyms, h, label, ctx.config.delta) {
            let sim = edit_similarity(ctx.analyzer, h, label);
            if sim > best_sim {
                best_sim = sim;
                shadow_col = Some(c);
            }
        }
    }

    let mut best_all = 0.0f64;
    let mut best_shadow = 0.0f64;
    for row in &table.rows {
        let row_shadowed = row
            .iter()
            .any(|cell| matches!(cell, Cell::EntityRef(id) if id == entity));
        for (c, cell) in row.iter().enumerate() {
            let tokens = ctx.analyzer.tokenize(cell.text());
            let cos = cosine_tf(&desc, &tf_map(&tokens));
            best_all = best_all.max(cos);
            if row_shadowed || shadow_col == Some(c) {
                best_shadow = best_shadow.max(cos);
            }
        }
    }
    best_all - best_shadow
}

/// The four attribute-retrieval components for one entity, already weighted.
fn ar_entity_score(
    ctx: &SchemaRankContext,
    retrieved: &RankedList,
    label: &str,
    entity: &str,
) -> f64 {
    let [w_match, w_drel, w_sh, w_kb] = ctx.config.ar_weights;
    let (m, drel) = match retrieved.items().first() {
        Some((top_id, _)) => {
            let n = retrieved.len() as f64;
            let m = match ctx.corpus.get(top_id) {
                Some(t) => cell_match_score(ctx, t, label, entity),
                None => 0.0,
            };
            (m, (n - 1.0) / n)
        }
        None => (0.0, 0.0),
    };
    let sh = if ctx.hits.hits(label, entity) >= ctx.config.sh_threshold {
        1.0
    } else {
        0.0
    };
    let kb = if match_kb(ctx.kb, ctx.analyzer, ctx.synonyms, entity, label, ctx.config.delta) {
        1.0
    } else {
        0.0
    };
    w_match * m + w_drel * drel + w_sh * sh + w_kb * kb
}

/// Mean attribute-retrieval evidence over the feedback entities. The top
/// query table anchors the cell-match and rank components; when nothing is
/// retrieved those two are zero and the hits and property components still
/// count.
pub fn attribute_retrieval(
    ctx: &SchemaRankContext,
    query_tokens: &[String],
    label: &str,
    feedback_entities: &[String],
) -> Result<f64> {
    if feedback_entities.is_empty() {
        return Err(Error::EmptyFeedback("attribute retrieval needs feedback entities"));
    }
    let retrieved = ctx.table_index.bm25_rank(
        query_tokens,
        ctx.config.table_k,
        ctx.config.bm25_k1,
        ctx.config.bm25_b,
    );
    let total: f64 = feedback_entities
        .iter()
        .map(|e| ar_entity_score(ctx, &retrieved, label, e))
        .sum();
    Ok(total / feedback_entities.len() as f64)
}

/// Candidate labels: the column-population pool, expanded in feedback rounds
/// with the labels of tables holding any feedback entity in their core
/// column and with the feedback entities' property labels.
pub fn label_candidates(
    ctx: &SchemaRankContext,
    query_tokens: &[String],
    feedback_entities: &[String],
) -> Vec<String> {
    let cp = column_population(ctx, query_tokens);
    let mut candidates = cp.top_ids(ctx.config.candidate_labels);
    if !feedback_entities.is_empty() {
        let mut extra: BTreeSet<String> = BTreeSet::new();
        for e in feedback_entities {
            for t in ctx.corpus.tables_with_core_entity(e) {
                for h in &t.headings {
                    extra.insert(ctx.analyzer.normalize_label(h));
                }
            }
            if let Some(entity) = ctx.kb.get(e) {
                for p in entity.properties.keys() {
                    extra.insert(ctx.analyzer.normalize_label(p));
                }
            }
        }
        for l in extra {
            if !l.is_empty() && !candidates.contains(&l) {
                candidates.push(l);
            }
        }
    }
    candidates
}

/// Raw (unnormalized) feature vectors for all candidate labels.
/// `feedback_entities` empty means round 0: φ2, φ4, φ5 stay exactly 0.
pub fn schema_features(
    ctx: &SchemaRankContext,
    query_tokens: &[String],
    feedback_entities: &[String],
) -> Result<Vec<(String, [f64; SCHEMA_FEATURES])>> {
    let candidates = label_candidates(ctx, query_tokens, feedback_entities);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let matcher = ctx.models.require(MatcherKind::SchemaLabel, "phi3 query vs label")?;
    let tables = ctx.retrieve_tables(query_tokens);
    let with_feedback = !feedback_entities.is_empty();

    let (coverage_tables, compat, retrieved) = if with_feedback {
        let weighted: Vec<(&RelationalTable, f64)> = tables
            .iter()
            .map(|(t, rel)| (*t, rel * entity_coverage(t, feedback_entities)))
            .collect();
        let compat = CompatibilityMatrix::build(
            feedback_entities,
            &candidates,
            ctx.kb,
            ctx.corpus,
            ctx.analyzer,
            ctx.synonyms,
            ctx.config.delta,
        );
        let retrieved = ctx.table_index.bm25_rank(
            query_tokens,
            ctx.config.table_k,
            ctx.config.bm25_k1,
            ctx.config.bm25_b,
        );
        (weighted, Some(compat), retrieved)
    } else {
        (Vec::new(), None, RankedList::empty())
    };

    let mut out = Vec::with_capacity(candidates.len());
    for (j, s) in candidates.iter().enumerate() {
        let mut phi = [0.0; SCHEMA_FEATURES];
        phi[0] = cp_score(ctx.analyzer, s, &tables, ctx.config.gamma);
        phi[2] = matcher.score(query_tokens, &ctx.analyzer.tokenize(s));
        if with_feedback {
            phi[1] = cp_score(ctx.analyzer, s, &coverage_tables, ctx.config.gamma);
            let total: f64 = feedback_entities
                .iter()
                .map(|e| ar_entity_score(ctx, &retrieved, s, e))
                .sum();
            phi[3] = total / feedback_entities.len() as f64;
            phi[4] = compat.as_ref().unwrap().esc_label(j)?;
        }
        out.push((s.clone(), phi));
    }
    Ok(out)
}

/// Ranks candidate schema labels for a query, optionally assisted by
/// feedback entities from the previous round.
pub fn rank_labels(
    ctx: &SchemaRankContext,
    query: &str,
    feedback_entities: &[String],
    weights: &[f64],
) -> Result<RankedList> {
    if weights.len() != SCHEMA_FEATURES {
        return Err(Error::WeightMismatch { expected: SCHEMA_FEATURES, got: weights.len() });
    }
    let q = ctx.analyzer.tokenize(query);
    let features = schema_features(ctx, &q, feedback_entities)?;
    let rows: Vec<(String, Vec<f64>)> =
        features.into_iter().map(|(s, phi)| (s, phi.to_vec())).collect();
    Ok(rank_by_features(&rows, weights))
}
