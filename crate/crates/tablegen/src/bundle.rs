//! On-disk persistence of built artifacts.
//!
//! A bundle directory holds four JSON artifacts plus a manifest:
//!
//! | file          | contents                                         |
//! |---------------|--------------------------------------------------|
//! | store.json    | stopword list, knowledge base, relational tables |
//! | indexes.json  | entity and table inverted indexes                |
//! | catalog.json  | per-entity fact catalog                          |
//! | synonyms.json | mined label synonym groups                       |
//! | manifest.json | artifact names, files, and SHA-256 digests       |
//!
//! Every structure serializes through ordered maps and carries no timestamps,
//! so saving the same inputs twice produces byte-identical files. Loading
//! verifies each artifact against its manifest digest and refuses the bundle
//! on any mismatch, so a half-written or hand-edited directory fails loudly
//! instead of producing silently wrong rankings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzer::Analyzer;
use crate::config::Config;
use crate::corpus::{EntityStore, RelationalTable, TableCorpus};
use crate::error::{Error, Result};
use crate::pipeline::Resources;
use crate::schema_determination::hits_provider;
use crate::schema_norm::SynonymSets;
use crate::semantic_match::ModelSet;
use crate::text_index::InvertedIndex;
use crate::value_lookup::FactCatalog;

pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub artifacts: Vec<ArtifactEntry>,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    stopwords: Vec<String>,
    entities: EntityStore,
    tables: Vec<RelationalTable>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    entity_index: InvertedIndex,
    table_index: InvertedIndex,
}

/// Everything a saved bundle restores. Models and config are not part of a
/// bundle: models are trained and versioned separately, and config belongs to
/// the run, not the data.
#[derive(Debug)]
pub struct BundleParts {
    pub analyzer: Analyzer,
    pub kb: EntityStore,
    pub corpus: TableCorpus,
    pub entity_index: InvertedIndex,
    pub table_index: InvertedIndex,
    pub synonyms: SynonymSets,
    pub catalog: FactCatalog,
}

impl BundleParts {
    /// Wires the restored artifacts into runnable resources.
    pub fn into_resources(self, models: ModelSet, config: Config) -> Result<Resources> {
        let hits = hits_provider(&config)?;
        Ok(Resources {
            analyzer: self.analyzer,
            config,
            kb: self.kb,
            corpus: self.corpus,
            entity_index: self.entity_index,
            table_index: self.table_index,
            synonyms: self.synonyms,
            catalog: self.catalog,
            models,
            hits,
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_artifact<T: Serialize>(
    dir: &Path,
    name: &str,
    file: &str,
    value: &T,
) -> Result<ArtifactEntry> {
    let bytes = serde_json::to_vec(value)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize {name}: {e}")))?;
    std::fs::write(dir.join(file), &bytes)?;
    Ok(ArtifactEntry { name: name.to_string(), file: file.to_string(), sha256: sha256_hex(&bytes) })
}

/// Writes the four artifacts plus the manifest and returns the manifest.
pub fn save_bundle(dir: &Path, res: &Resources) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let store = StoreFile {
        stopwords: res.analyzer.stopwords().map(str::to_string).collect(),
        entities: res.kb.clone(),
        tables: res.corpus.tables().to_vec(),
    };
    let indexes = IndexFile {
        entity_index: res.entity_index.clone(),
        table_index: res.table_index.clone(),
    };
    let artifacts = vec![
        write_artifact(dir, "store", "store.json", &store)?,
        write_artifact(dir, "indexes", "indexes.json", &indexes)?,
        write_artifact(dir, "catalog", "catalog.json", &res.catalog)?,
        write_artifact(dir, "synonyms", "synonyms.json", &res.synonyms)?,
    ];
    let manifest = Manifest { version: BUNDLE_VERSION, artifacts };
    let bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize manifest: {e}")))?;
    std::fs::write(dir.join(MANIFEST_FILE), bytes)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&path)
        .map_err(|e| Error::CorruptBundle(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| Error::CorruptBundle(format!("manifest.json: {e}")))?;
    if manifest.version != BUNDLE_VERSION {
        return Err(Error::CorruptBundle(format!(
            "unsupported bundle version {} (expected {BUNDLE_VERSION})",
            manifest.version
        )));
    }
    Ok(manifest)
}

fn read_artifact<T: for<'de> Deserialize<'de>>(dir: &Path, manifest: &Manifest, name: &str) -> Result<T> {
    let entry = manifest
        .artifacts
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| Error::CorruptBundle(format!("manifest lists no `{name}` artifact")))?;
    let path = dir.join(&entry.file);
    let bytes = std::fs::read(&path)
        .map_err(|e| Error::CorruptBundle(format!("{}: {e}", path.display())))?;
    let digest = sha256_hex(&bytes);
    if digest != entry.sha256 {
        return Err(Error::CorruptBundle(format!(
            "{}: content hash {digest} does not match manifest {}",
            entry.file, entry.sha256
        )));
    }
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::CorruptBundle(format!("{}: {e}", entry.file)))
}

/// Reads a bundle back, verifying every artifact digest.
pub fn load_bundle(dir: &Path) -> Result<BundleParts> {
    let manifest = load_manifest(dir)?;
    let store: StoreFile = read_artifact(dir, &manifest, "store")?;
    let indexes: IndexFile = read_artifact(dir, &manifest, "indexes")?;
    let catalog: FactCatalog = read_artifact(dir, &manifest, "catalog")?;
    let synonyms: SynonymSets = read_artifact(dir, &manifest, "synonyms")?;
    Ok(BundleParts {
        analyzer: Analyzer::with_stopwords(store.stopwords),
        kb: store.entities,
        corpus: TableCorpus::from_tables(store.tables),
        entity_index: indexes.entity_index,
        table_index: indexes.table_index,
        synonyms,
        catalog,
    })
}
