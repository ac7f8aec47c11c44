//! Generates relational tables as direct answers to keyword queries.
//!
//! The engine combines a corpus of relational tables with a knowledge base.
//! Answering a query breaks into three subtasks: ranking the entities that
//! form the core column, determining the heading labels (the schema), and
//! looking up a value with a traceable source for every (entity, label) cell.
//! Entity ranking and schema determination feed each other's output back as
//! evidence over a configurable number of rounds before values are filled in.
//!
//! Module map:
//! - [`corpus`]: table and knowledge-base ingestion, core column detection
//! - [`text_index`]: inverted index with query-likelihood and BM25 scoring
//! - [`schema_norm`]: label normalization, edit similarity, synonym discovery
//! - [`semantic_match`]: trainable semantic matching over word embeddings
//! - [`entity_ranking`] / [`schema_determination`]: the two ranking subtasks
//! - [`value_lookup`]: fact catalog and provenance-tracked cell filling
//! - [`pipeline`]: the iterative loop tying the subtasks together
//! - [`evaluation`]: rank metrics, weight learning, run/qrels files
//! - [`bundle`]: on-disk artifact persistence with a content-hash manifest

pub mod analyzer;
pub mod bundle;
pub mod config;
pub mod corpus;
pub mod entity_ranking;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod ranking;
pub mod schema_determination;
pub mod schema_norm;
pub mod semantic_match;
pub mod text_index;
pub mod value_lookup;

pub use analyzer::Analyzer;
pub use config::Config;
pub use error::{Error, Result};
pub use pipeline::{Engine, GeneratedTable, GenerationParams, Resources};
pub use ranking::RankedList;
