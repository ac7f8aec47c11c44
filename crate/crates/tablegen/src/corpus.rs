//! Table corpus and knowledge base ingestion.
//!
//! Tables arrive as JSON lines. Each table is classified: if it has a core
//! column of entities plus at least two rows and two columns it is kept as a
//! [`RelationalTable`], otherwise it is counted and dropped. The core column
//! is the column with the most entity-reference cells (leftmost on ties) and
//! must hold at least two entities to qualify.
//!
//! Knowledge-base entities carry a description and a property map. Alongside
//! those two a "catchall" field is assembled from the description followed by
//! every property label and value, which is what the entity text index is
//! built over.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analyzer::Analyzer;
use crate::error::{Error, Result};

/// One table cell: either a resolved entity reference or plain text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    EntityRef(String),
    Literal(String),
}

impl Cell {
    pub fn is_entity(&self) -> bool {
        matches!(self, Cell::EntityRef(_))
    }

    /// The cell's surface text: the identifier for entity references.
    pub fn text(&self) -> &str {
        match self {
            Cell::EntityRef(id) => id,
            Cell::Literal(t) => t,
        }
    }

    pub fn is_blank(&self) -> bool {
        self.text().trim().is_empty()
    }
}

/// A parsed table before classification.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub id: String,
    pub caption: String,
    pub page_title: String,
    pub headings: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// A table that passed the relational test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalTable {
    pub id: String,
    pub caption: String,
    pub page_title: String,
    pub headings: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Index of the core column within `headings`.
    pub core_column: usize,
    /// Distinct core-column entities in first-appearance row order.
    pub core_entities: Vec<String>,
}

impl RelationalTable {
    /// Re-checks the core column choice: it must hold at least two entity
    /// cells and no other column may hold more (leftmost wins ties).
    pub fn validate_core_column(&self) -> bool {
        match detect_core_column(&self.rows) {
            Some(col) => col == self.core_column,
            None => false,
        }
    }

    /// Cells of the core column, top to bottom.
    pub fn core_cells(&self) -> impl Iterator<Item = &Cell> {
        self.rows.iter().filter_map(move |r| r.get(self.core_column))
    }

    /// Serializes back to the external JSON-lines record shape.
    pub fn to_external_value(&self) -> serde_json::Value {
        let rows: Vec<Vec<ExternalCell>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(ExternalCell::from_cell).collect())
            .collect();
        serde_json::json!({
            "id": self.id,
            "caption": self.caption,
            "pageTitle": self.page_title,
            "headings": self.headings,
            "rows": rows,
        })
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct ExternalTable {
    id: String,
    #[serde(default)]
    caption: String,
    #[serde(default, rename = "pageTitle")]
    page_title: String,
    #[serde(default)]
    headings: Vec<String>,
    #[serde(default)]
    rows: Vec<Vec<ExternalCell>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum ExternalCell {
    Entity { e: String },
    Text { t: String },
}

impl ExternalCell {
    fn into_cell(self) -> Cell {
        match self {
            ExternalCell::Entity { e } => Cell::EntityRef(e),
            ExternalCell::Text { t } => Cell::Literal(t),
        }
    }

    fn from_cell(cell: &Cell) -> ExternalCell {
        match cell {
            Cell::EntityRef(id) => ExternalCell::Entity { e: id.clone() },
            Cell::Literal(t) => ExternalCell::Text { t: t.clone() },
        }
    }
}

/// Per-record problems collected while a stream is ingested.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub lines: usize,
    pub records: usize,
    pub errors: Vec<(usize, String)>,
    pub duplicate_ids: usize,
}

/// Reads a JSON-lines table stream. Malformed lines are recorded and skipped;
/// only an unreadable stream is a hard error.
pub fn parse_table_corpus<R: BufRead>(reader: R) -> Result<(Vec<RawTable>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut tables: Vec<RawTable> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        report.lines += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExternalTable>(&line) {
            Ok(ext) => {
                let n_cols = ext.headings.len();
                let rows = ext
                    .rows
                    .into_iter()
                    .map(|row| {
                        let mut cells: Vec<Cell> =
                            row.into_iter().map(ExternalCell::into_cell).collect();
                        // Ragged rows are squared up against the headings.
                        cells.truncate(n_cols);
                        while cells.len() < n_cols {
                            cells.push(Cell::Literal(String::new()));
                        }
                        cells
                    })
                    .collect();
                let table = RawTable {
                    id: ext.id,
                    caption: ext.caption,
                    page_title: ext.page_title,
                    headings: ext.headings,
                    rows,
                };
                if let Some(&prev) = seen.get(&table.id) {
                    log::warn!("duplicate table id {}, keeping the later record", table.id);
                    report.duplicate_ids += 1;
                    tables[prev] = table;
                } else {
                    seen.insert(table.id.clone(), tables.len());
                    tables.push(table);
                }
                report.records += 1;
            }
            Err(e) => report.errors.push((idx + 1, e.to_string())),
        }
    }
    Ok((tables, report))
}

/// A knowledge-base entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub description: String,
    /// All text about the entity: description followed by each property label
    /// and its values, joined with single spaces.
    pub catchall: String,
    pub properties: BTreeMap<String, Vec<String>>,
}

impl Entity {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        properties: BTreeMap<String, Vec<String>>,
    ) -> Entity {
        let description = description.into();
        let catchall = build_catchall(&description, &properties);
        Entity { id: id.into(), description, catchall, properties }
    }

    /// Property labels and values interleaved: `label v1 v2 label v1 ...`.
    pub fn properties_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        for (label, values) in &self.properties {
            parts.push(label);
            for v in values {
                parts.push(v);
            }
        }
        parts.join(" ")
    }

    /// Token stream for one of the three entity representations.
    pub fn representation(&self, repr: EntityRepr, analyzer: &Analyzer) -> Vec<String> {
        match repr {
            EntityRepr::All => analyzer.tokenize(&self.catchall),
            EntityRepr::Description => analyzer.tokenize(&self.description),
            EntityRepr::Properties => analyzer.tokenize(&self.properties_text()),
        }
    }
}

fn build_catchall(description: &str, properties: &BTreeMap<String, Vec<String>>) -> String {
    let mut parts: Vec<&str> = Vec::new();
    if !description.is_empty() {
        parts.push(description);
    }
    let props_text: Vec<String> = properties
        .iter()
        .map(|(label, values)| {
            let mut piece = vec![label.as_str()];
            piece.extend(values.iter().map(|v| v.as_str()));
            piece.join(" ")
        })
        .collect();
    let mut out = parts.join(" ");
    for piece in &props_text {
        if piece.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(piece);
    }
    out
}

/// Which slice of an entity's text to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRepr {
    All,
    Description,
    Properties,
}

impl FromStr for EntityRepr {
    type Err = Error;

    fn from_str(s: &str) -> Result<EntityRepr> {
        match s {
            "all" => Ok(EntityRepr::All),
            "description" => Ok(EntityRepr::Description),
            "properties" => Ok(EntityRepr::Properties),
            other => Err(Error::UnknownRepresentation(other.to_string())),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ExternalEntity {
    id: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    properties: BTreeMap<String, Vec<String>>,
}

/// The loaded knowledge base, keyed by entity id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityStore {
    entities: BTreeMap<String, Entity>,
}

impl EntityStore {
    pub fn from_entities(entities: impl IntoIterator<Item = Entity>) -> EntityStore {
        let mut store = EntityStore::default();
        for e in entities {
            store.entities.insert(e.id.clone(), e);
        }
        store
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entities.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }
}

/// Reads a JSON-lines knowledge base dump. On duplicate ids the later record
/// wins and a warning is recorded.
pub fn parse_kb_dump<R: BufRead>(reader: R) -> Result<(EntityStore, ParseReport)> {
    let mut report = ParseReport::default();
    let mut store = EntityStore::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        report.lines += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExternalEntity>(&line) {
            Ok(ext) => {
                let entity = Entity::new(ext.id, ext.description, ext.properties);
                if store.contains(&entity.id) {
                    log::warn!("duplicate entity id {}, keeping the later record", entity.id);
                    report.duplicate_ids += 1;
                }
                store.entities.insert(entity.id.clone(), entity);
                report.records += 1;
            }
            Err(e) => report.errors.push((idx + 1, e.to_string())),
        }
    }
    Ok((store, report))
}

/// The core column is the column with the most entity-reference cells,
/// leftmost on ties; a column qualifies only with at least two entity cells.
pub fn detect_core_column(rows: &[Vec<Cell>]) -> Option<usize> {
    let n_cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut best: Option<(usize, usize)> = None; // (count, col)
    for col in 0..n_cols {
        let count = rows.iter().filter(|r| r.get(col).is_some_and(Cell::is_entity)).count();
        match best {
            Some((c, _)) if count <= c => {}
            _ => best = Some((count, col)),
        }
    }
    best.filter(|&(count, _)| count >= 2).map(|(_, col)| col)
}

/// A table is relational when a core column exists and the table spans at
/// least two rows and two columns.
pub fn classify_relational(n_cols: usize, rows: &[Vec<Cell>]) -> bool {
    rows.len() >= 2 && n_cols >= 2 && detect_core_column(rows).is_some()
}

/// Counts from turning raw tables into the relational corpus.
#[derive(Debug, Clone, Default)]
pub struct ClassifyReport {
    pub relational: usize,
    pub non_relational: usize,
    pub demoted_refs: usize,
}

/// The relational slice of the ingested tables, with lookup maps.
#[derive(Debug, Clone)]
pub struct TableCorpus {
    tables: Vec<RelationalTable>,
    by_id: BTreeMap<String, usize>,
    /// entity id -> indexes of tables where it appears in the core column
    core_membership: BTreeMap<String, Vec<usize>>,
}

impl TableCorpus {
    /// Resolves entity references against the knowledge base (unresolved
    /// references demote to text literals), classifies every table, and keeps
    /// the relational ones.
    pub fn from_raw(raw: Vec<RawTable>, kb: &EntityStore) -> (TableCorpus, ClassifyReport) {
        let mut report = ClassifyReport::default();
        let mut tables = Vec::new();
        for mut t in raw {
            for row in &mut t.rows {
                for cell in row.iter_mut() {
                    if let Cell::EntityRef(id) = cell {
                        if !kb.contains(id) {
                            report.demoted_refs += 1;
                            *cell = Cell::Literal(std::mem::take(id));
                        }
                    }
                }
            }
            if !classify_relational(t.headings.len(), &t.rows) {
                report.non_relational += 1;
                continue;
            }
            let core_column = detect_core_column(&t.rows).expect("classified tables have one");
            let mut seen = BTreeSet::new();
            let mut core_entities = Vec::new();
            for row in &t.rows {
                if let Some(Cell::EntityRef(id)) = row.get(core_column) {
                    if seen.insert(id.clone()) {
                        core_entities.push(id.clone());
                    }
                }
            }
            report.relational += 1;
            tables.push(RelationalTable {
                id: t.id,
                caption: t.caption,
                page_title: t.page_title,
                headings: t.headings,
                rows: t.rows,
                core_column,
                core_entities,
            });
        }
        (TableCorpus::from_tables(tables), report)
    }

    /// Rebuilds the lookup maps over an already-classified table list.
    pub fn from_tables(tables: Vec<RelationalTable>) -> TableCorpus {
        let mut by_id = BTreeMap::new();
        let mut core_membership: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, t) in tables.iter().enumerate() {
            by_id.insert(t.id.clone(), idx);
            for e in &t.core_entities {
                core_membership.entry(e.clone()).or_default().push(idx);
            }
        }
        TableCorpus { tables, by_id, core_membership }
    }

    pub fn tables(&self) -> &[RelationalTable] {
        &self.tables
    }

    pub fn get(&self, id: &str) -> Option<&RelationalTable> {
        self.by_id.get(id).map(|&i| &self.tables[i])
    }

    pub fn tables_with_core_entity(&self, entity: &str) -> impl Iterator<Item = &RelationalTable> {
        self.core_membership
            .get(entity)
            .into_iter()
            .flatten()
            .map(move |&i| &self.tables[i])
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}
