//! Core column entity ranking.
//!
//! Candidates come from query-likelihood retrieval over the entity catchall
//! text; each candidate is then re-scored by a weighted sum of up to seven
//! features:
//!
//! | #   | signal                                                    |
//! |-----|-----------------------------------------------------------|
//! | φ1  | query likelihood of the full entity text                  |
//! | φ2  | semantic match, query vs entity description               |
//! | φ3  | semantic match, query vs entity properties                |
//! | φ4  | semantic match, feedback schema vs entity description     |
//! | φ5  | semantic match, feedback schema vs entity properties      |
//! | φ6  | semantic match, query+schema vs description+properties    |
//! | φ7  | schema compatibility (mean row of the compatibility matrix) |
//!
//! In round 0 there is no schema feedback yet, so φ4 through φ7 are exactly
//! zero. Features are min-max normalized per query before combination, which
//! puts their very different scales onto [0, 1] so uniform weights mean what
//! they say.

use crate::analyzer::Analyzer;
use crate::config::Config;
use crate::corpus::{EntityRepr, EntityStore, TableCorpus};
use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::schema_norm::{labels_match, SynonymSets};
use crate::semantic_match::{MatcherKind, ModelSet};
use crate::text_index::InvertedIndex;

pub const ENTITY_FEATURES: usize = 7;

/// Whether some property label of `entity` matches `label`. Unknown entities
/// count as having no properties (with a warning).
pub fn match_kb(
    kb: &EntityStore,
    analyzer: &Analyzer,
    synonyms: &SynonymSets,
    entity: &str,
    label: &str,
    delta: f64,
) -> bool {
    let Some(e) = kb.get(entity) else {
        log::warn!("compatibility check against unknown entity `{entity}`");
        return false;
    };
    e.properties
        .keys()
        .any(|p| labels_match(analyzer, synonyms, p, label, delta))
}

/// Whether some table with `entity` in its core column has a heading
/// matching `label`.
pub fn match_tc(
    corpus: &TableCorpus,
    analyzer: &Analyzer,
    synonyms: &SynonymSets,
    entity: &str,
    label: &str,
    delta: f64,
) -> bool {
    corpus.tables_with_core_entity(entity).any(|t| {
        t.headings
            .iter()
            .any(|h| labels_match(analyzer, synonyms, h, label, delta))
    })
}

/// Binary entity-label compatibility: `C[i][j] = 1` iff entity i has label j
/// as a property in the knowledge base or co-occurs with it in some table's
/// core column. One matrix serves both ranking directions: entities read row
/// means, labels read column means.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMatrix {
    entities: Vec<String>,
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CompatibilityMatrix {
    pub fn build(
        entities: &[String],
        labels: &[String],
        kb: &EntityStore,
        corpus: &TableCorpus,
        analyzer: &Analyzer,
        synonyms: &SynonymSets,
        delta: f64,
    ) -> CompatibilityMatrix {
        let rows = entities
            .iter()
            .map(|e| {
                labels
                    .iter()
                    .map(|s| {
                        let hit = match_kb(kb, analyzer, synonyms, e, s, delta)
                            || match_tc(corpus, analyzer, synonyms, e, s, delta);
                        if hit {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        CompatibilityMatrix {
            entities: entities.to_vec(),
            labels: labels.to_vec(),
            rows,
        }
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// Mean of entity row `i`: the fraction of the feedback labels this
    /// entity is compatible with.
    pub fn esc_entity(&self, i: usize) -> Result<f64> {
        if self.labels.is_empty() {
            return Err(Error::EmptyFeedback("schema compatibility needs feedback labels"));
        }
        Ok(self.rows[i].iter().sum::<f64>() / self.labels.len() as f64)
    }

    /// Mean of label column `j`: the fraction of the feedback entities
    /// holding this label.
    pub fn esc_label(&self, j: usize) -> Result<f64> {
        if self.entities.is_empty() {
            return Err(Error::EmptyFeedback("label compatibility needs feedback entities"));
        }
        Ok(self.rows.iter().map(|r| r[j]).sum::<f64>() / self.entities.len() as f64)
    }
}

/// Min-max normalization of one feature column. A constant column carries no
/// ranking signal and collapses to zeros.
pub fn minmax_feature(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || max == min {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Normalizes each feature column, then ranks by the weighted sum.
/// Every row must carry `weights.len()` features.
pub fn rank_by_features(rows: &[(String, Vec<f64>)], weights: &[f64]) -> RankedList {
    if rows.is_empty() {
        return RankedList::empty();
    }
    let n = weights.len();
    let mut normalized = vec![vec![0.0; n]; rows.len()];
    for f in 0..n {
        let column: Vec<f64> = rows.iter().map(|r| r.1[f]).collect();
        for (i, v) in minmax_feature(&column).into_iter().enumerate() {
            normalized[i][f] = v;
        }
    }
    let scored = rows
        .iter()
        .zip(&normalized)
        .map(|((id, _), nf)| (id.clone(), nf.iter().zip(weights).map(|(v, w)| v * w).sum()))
        .collect();
    RankedList::from_scores(scored)
}

/// Parses a `phi1 <w> phi2 <w> ...` weights file. Every index 1..=n must
/// appear exactly once; order is free.
pub fn parse_weights(text: &str, n: usize) -> Result<Vec<f64>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 2 * n {
        return Err(Error::WeightMismatch { expected: n, got: tokens.len() / 2 });
    }
    let mut out: Vec<Option<f64>> = vec![None; n];
    for pair in tokens.chunks(2) {
        let idx: usize = pair[0]
            .strip_prefix("phi")
            .and_then(|d| d.parse().ok())
            .filter(|i| (1..=n).contains(i))
            .ok_or_else(|| Error::InvalidInput(format!("unknown weight name `{}`", pair[0])))?;
        let value: f64 = pair[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad weight value `{}`", pair[1])))?;
        if out[idx - 1].replace(value).is_some() {
            return Err(Error::InvalidInput(format!("duplicate weight `{}`", pair[0])));
        }
    }
    Ok(out.into_iter().map(|v| v.unwrap()).collect())
}

/// Read-only state entity ranking draws on.
pub struct EntityRankContext<'a> {
    pub analyzer: &'a Analyzer,
    pub kb: &'a EntityStore,
    pub corpus: &'a TableCorpus,
    /// Query-likelihood index over entity catchall text, ids = entity ids.
    pub entity_index: &'a InvertedIndex,
    pub models: &'a ModelSet,
    pub synonyms: &'a SynonymSets,
    pub config: &'a Config,
}

/// Raw (unnormalized) feature vector of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityFeatures {
    pub id: String,
    pub phi: [f64; ENTITY_FEATURES],
}

/// Raw features for the retrieval candidates, in candidate rank order.
/// `feedback_labels` empty means round 0: φ4 through φ7 stay exactly 0 and
/// the models they need are not required.
pub fn entity_features(
    ctx: &EntityRankContext,
    query_tokens: &[String],
    feedback_labels: &[String],
) -> Result<Vec<EntityFeatures>> {
    let candidates = ctx.entity_index.lm_rank(
        query_tokens,
        ctx.config.candidate_entities,
        ctx.config.mu,
    );
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let desc = ctx.models.require(MatcherKind::EntityDescription, "phi2 query vs description")?;
    let props = ctx.models.require(MatcherKind::EntityProperties, "phi3 query vs properties")?;
    let with_feedback = !feedback_labels.is_empty();
    let (combined, compat, s_tokens) = if with_feedback {
        let ids: Vec<String> = candidates.items().iter().map(|(id, _)| id.clone()).collect();
        let compat = CompatibilityMatrix::build(
            &ids,
            feedback_labels,
            ctx.kb,
            ctx.corpus,
            ctx.analyzer,
            ctx.synonyms,
            ctx.config.delta,
        );
        let s_tokens: Vec<String> = feedback_labels
            .iter()
            .flat_map(|l| ctx.analyzer.tokenize(l))
            .collect();
        let combined =
            ctx.models.require(MatcherKind::EntityCombined, "phi6 query+schema vs entity text")?;
        (Some(combined), Some(compat), s_tokens)
    } else {
        (None, None, Vec::new())
    };

    let mut out = Vec::with_capacity(candidates.len());
    for (i, (id, lm)) in candidates.items().iter().enumerate() {
        let entity = ctx
            .kb
            .get(id)
            .ok_or_else(|| Error::UnknownDocument(id.clone()))?;
        let e_d = entity.representation(EntityRepr::Description, ctx.analyzer);
        let e_p = entity.representation(EntityRepr::Properties, ctx.analyzer);
        let mut phi = [0.0; ENTITY_FEATURES];
        phi[0] = *lm;
        phi[1] = desc.score(query_tokens, &e_d);
        phi[2] = props.score(query_tokens, &e_p);
        if with_feedback {
            phi[3] = desc.score(&s_tokens, &e_d);
            phi[4] = props.score(&s_tokens, &e_p);
            let mut qs = query_tokens.to_vec();
            qs.extend(s_tokens.iter().cloned());
            let mut e_dp = e_d.clone();
            e_dp.extend(e_p.iter().cloned());
            phi[5] = combined.unwrap().score(&qs, &e_dp);
            phi[6] = compat.as_ref().unwrap().esc_entity(i)?;
        }
        out.push(EntityFeatures { id: id.clone(), phi });
    }
    Ok(out)
}

/// Ranks candidate entities for a query, optionally assisted by feedback
/// schema labels from the previous round.
pub fn rank_entities(
    ctx: &EntityRankContext,
    query: &str,
    feedback_labels: &[String],
    weights: &[f64],
) -> Result<RankedList> {
    if weights.len() != ENTITY_FEATURES {
        return Err(Error::WeightMismatch { expected: ENTITY_FEATURES, got: weights.len() });
    }
    let q = ctx.analyzer.tokenize(query);
    let features = entity_features(ctx, &q, feedback_labels)?;
    let rows: Vec<(String, Vec<f64>)> =
        features.into_iter().map(|f| (f.id, f.phi.to_vec())).collect();
    Ok(rank_by_features(&rows, weights))
}
