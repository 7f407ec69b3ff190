//! Entity-centric premise tables and their JSON record form.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::SchemaSet;
use crate::value::{infer_value, TypedValue};

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("malformed table record: {0}")]
    MalformedRecord(String),
    #[error("table '{table}' has duplicate key '{key}'")]
    DuplicateKey { table: String, key: String },
    #[error("table '{0}' has no rows")]
    EmptyTable(String),
    #[error("unknown table id '{0}'")]
    UnknownTableId(String),
}

/// One key and its ordered, non-empty list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    key: String,
    values: Vec<TypedValue>,
}

impl Row {
    pub fn new(key: impl Into<String>, values: Vec<TypedValue>) -> Result<Self, TableError> {
        let key = key.into().trim().to_string();
        if key.is_empty() {
            return Err(TableError::MalformedRecord("row with empty key".into()));
        }
        if values.is_empty() {
            return Err(TableError::MalformedRecord(format!("row '{key}' has no values")));
        }
        Ok(Self { key, values })
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn values(&self) -> &[TypedValue] {
        &self.values
    }

    pub(crate) fn push_value(&mut self, v: TypedValue) {
        self.values.push(v);
    }

    pub(crate) fn set_values(&mut self, values: Vec<TypedValue>) {
        debug_assert!(!values.is_empty());
        self.values = values;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    id: String,
    title: String,
    category: String,
    rows: Vec<Row>,
    parent_id: Option<String>,
}

impl Table {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        category: impl Into<String>,
        rows: Vec<Row>,
    ) -> Result<Self, TableError> {
        let table = Self { id: id.into(), title: title.into(), category: category.into(), rows, parent_id: None };
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<(), TableError> {
        if self.rows.is_empty() {
            return Err(TableError::EmptyTable(self.id.clone()));
        }
        let mut seen = HashSet::new();
        for row in &self.rows {
            if !seen.insert(row.key.as_str()) {
                return Err(TableError::DuplicateKey { table: self.id.clone(), key: row.key.clone() });
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, key: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn has_key(&self, key: &str) -> bool {
        self.row(key).is_some()
    }

    /// Number of keys in the table.
    pub fn key_count(&self) -> usize {
        self.rows.len()
    }

    pub fn parent_id(&self) -> Option<&str> {
        self.parent_id.as_deref()
    }

    pub fn is_counterfactual(&self) -> bool {
        self.parent_id.is_some()
    }

    /// Id of the original this table descends from (itself for originals).
    pub fn family_id(&self) -> &str {
        self.parent_id.as_deref().unwrap_or(&self.id)
    }

    pub(crate) fn rows_mut(&mut self) -> &mut Vec<Row> {
        &mut self.rows
    }

    pub(crate) fn derive_counterfactual(&self, id: String) -> Self {
        Self {
            id,
            title: self.title.clone(),
            category: self.category.clone(),
            rows: self.rows.clone(),
            parent_id: Some(self.id.clone()),
        }
    }

    pub fn to_record(&self) -> TableRecord {
        TableRecord {
            id: Some(self.id.clone()),
            title: Some(self.title.clone()),
            category: Some(self.category.clone()),
            rows: self
                .rows
                .iter()
                .map(|r| RowRecord {
                    key: r.key.clone(),
                    values: r.values.iter().map(|v| v.raw().to_string()).collect(),
                })
                .collect(),
            is_counterfactual: self.parent_id.as_ref().map(|_| true),
            parent_id: self.parent_id.clone(),
        }
    }

    /// Single-line JSON record.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("table records always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub key: String,
    pub values: Vec<String>,
}

/// The on-disk JSON object for one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub id: Option<String>,
    pub title: Option<String>,
    pub category: Option<String>,
    #[serde(default)]
    pub rows: Vec<RowRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_counterfactual: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

/// Builds a typed table from a record. Cell strings containing `;` are split
/// into multiple values; values are typed with the schema's kind as hint.
pub fn ingest_table(record: &TableRecord, schemas: Option<&SchemaSet>) -> Result<Table, TableError> {
    let field = |v: &Option<String>, name: &str| -> Result<String, TableError> {
        v.as_ref()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| TableError::MalformedRecord(format!("missing {name}")))
    };
    let id = field(&record.id, "id")?;
    let title = field(&record.title, "title")?;
    let category = field(&record.category, "category")?;
    if record.rows.is_empty() {
        return Err(TableError::EmptyTable(id));
    }
    let mut rows = Vec::with_capacity(record.rows.len());
    for r in &record.rows {
        let hint = schemas.and_then(|s| s.key(&category, r.key.trim())).map(|k| k.value_kind);
        let values = r
            .values
            .iter()
            .flat_map(|cell| cell.split(';'))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| infer_value(s, hint))
            .collect();
        rows.push(Row::new(r.key.as_str(), values)?);
    }
    let parent_id = record.parent_id.clone().filter(|p| !p.is_empty());
    if record.is_counterfactual.unwrap_or(false) != parent_id.is_some() {
        return Err(TableError::MalformedRecord(format!(
            "table '{id}': is_counterfactual must be set exactly when parent_id is present"
        )));
    }
    let mut table = Table::new(id, title, category, rows)?;
    table.parent_id = parent_id;
    Ok(table)
}

/// Parses a JSON-lines corpus. Blank lines are skipped.
pub fn parse_corpus(text: &str, schemas: Option<&SchemaSet>) -> Result<Vec<Table>, CorpusError> {
    let mut tables = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TableRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::Json { line: i + 1, source: e })?;
        let table = ingest_table(&record, schemas).map_err(|e| CorpusError::Table { line: i + 1, source: e })?;
        if !ids.insert(table.id().to_string()) {
            return Err(CorpusError::DuplicateTableId { line: i + 1, id: table.id().to_string() });
        }
        tables.push(table);
    }
    Ok(tables)
}

pub fn write_corpus(tables: &[Table]) -> String {
    let mut out = String::new();
    for t in tables {
        out.push_str(&t.to_json());
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Table { line: usize, source: TableError },
    #[error("line {line}: duplicate table id '{id}'")]
    DuplicateTableId { line: usize, id: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ValueKind;

    fn record(json: &str) -> TableRecord {
        serde_json::from_str(json).unwrap()
    }

    const JANET: &str = r#"{"id":"janet","title":"Janet Leigh","category":"Person","rows":[
        {"key":"Born","values":["July 6, 1927"]},
        {"key":"Died","values":["October 3, 2004"]},
        {"key":"Children","values":["Kelly Curtis; Jamie Lee Curtis"]},
        {"key":"Alma Mater","values":["Stanford University"]},
        {"key":"Occupation","values":["None"]}]}"#;

    #[test]
    fn ingests_janet_leigh() {
        let t = ingest_table(&record(JANET), None).unwrap();
        assert_eq!(t.key_count(), 5);
        assert_eq!(t.category(), "Person");
        assert_eq!(t.row("Children").unwrap().values().len(), 2);
        assert_eq!(t.row("Born").unwrap().values()[0].kind(), ValueKind::Date);
        assert!(!t.is_counterfactual());
    }

    #[test]
    fn empty_and_duplicate() {
        let r = record(r#"{"id":"x","title":"X","category":"Person","rows":[]}"#);
        assert_eq!(ingest_table(&r, None), Err(TableError::EmptyTable("x".into())));
        let r = record(
            r#"{"id":"x","title":"X","category":"Person","rows":[{"key":"Born","values":["1900"]},{"key":"Born","values":["1901"]}]}"#,
        );
        assert!(matches!(ingest_table(&r, None), Err(TableError::DuplicateKey { .. })));
    }

    #[test]
    fn missing_title_or_category() {
        let r = record(r#"{"id":"x","category":"Person","rows":[{"key":"Born","values":["1900"]}]}"#);
        assert!(matches!(ingest_table(&r, None), Err(TableError::MalformedRecord(_))));
        let r = record(r#"{"id":"x","title":"X","rows":[{"key":"Born","values":["1900"]}]}"#);
        assert!(matches!(ingest_table(&r, None), Err(TableError::MalformedRecord(_))));
    }

    #[test]
    fn counterfactual_flag_requires_parent() {
        let r = record(
            r#"{"id":"x","title":"X","category":"P","rows":[{"key":"A","values":["1"]}],"is_counterfactual":true}"#,
        );
        assert!(matches!(ingest_table(&r, None), Err(TableError::MalformedRecord(_))));
    }

    #[test]
    fn record_round_trip() {
        let t = ingest_table(&record(JANET), None).unwrap();
        let back = ingest_table(&t.to_record(), None).unwrap();
        assert_eq!(t, back);
        let cf = t.derive_counterfactual("janet-cf1".into());
        let back = parse_corpus(&write_corpus(std::slice::from_ref(&cf)), None).unwrap();
        assert_eq!(back[0], cf);
        assert_eq!(back[0].parent_id(), Some("janet"));
    }
}
