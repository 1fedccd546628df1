//! Tabular data model: typed schemas, datasets, CSV ingestion and the
//! three-way split protocol.

mod csv_io;
mod sidecar;
mod split;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PrroError, Result};

pub use csv_io::{load_csv, read_csv, save_csv, write_csv, SchemaSource};
pub use sidecar::{load_sidecar, sidecar_path_for, SchemaSidecar, SidecarColumn};
pub use split::{part_sizes, split, SplitBundle, SplitRatios};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Ordered category labels; empty for numeric columns.
    pub categories: Vec<String>,
    pub role: ColumnRole,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
            role: ColumnRole::Feature,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            role: ColumnRole::Feature,
        }
    }

    pub fn as_label(mut self) -> Self {
        self.role = ColumnRole::Label;
        self
    }

    pub fn is_label(&self) -> bool {
        self.role == ColumnRole::Label
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

/// Validated, ordered list of columns with exactly one label column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
    label: usize,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let mut label = None;
        for (i, col) in columns.iter().enumerate() {
            if col.name.is_empty() {
                return Err(PrroError::Schema(format!("column {i} has an empty name")));
            }
            if columns[..i].iter().any(|c| c.name == col.name) {
                return Err(PrroError::Schema(format!(
                    "duplicate column name '{}'",
                    col.name
                )));
            }
            match col.kind {
                ColumnKind::Numeric if !col.categories.is_empty() => {
                    return Err(PrroError::Schema(format!(
                        "numeric column '{}' declares categories",
                        col.name
                    )));
                }
                ColumnKind::Categorical => {
                    for (j, c) in col.categories.iter().enumerate() {
                        if col.categories[..j].contains(c) {
                            return Err(PrroError::Schema(format!(
                                "column '{}' lists category '{c}' twice",
                                col.name
                            )));
                        }
                        if c.is_empty() {
                            return Err(PrroError::Schema(format!(
                                "column '{}' has an empty category (empty is the missing marker)",
                                col.name
                            )));
                        }
                    }
                }
                _ => {}
            }
            if col.is_label() {
                if label.is_some() {
                    return Err(PrroError::Schema("more than one label column".into()));
                }
                label = Some(i);
            }
        }
        let label = label.ok_or_else(|| PrroError::Schema("no label column".into()))?;
        Ok(Schema { columns, label })
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &ColumnSchema {
        &self.columns[index]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn label_index(&self) -> usize {
        self.label
    }

    pub fn label(&self) -> &ColumnSchema {
        &self.columns[self.label]
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| i != self.label).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Same names, kinds and roles per position. Categories may differ.
    pub fn same_layout(&self, other: &Schema) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind && a.role == b.role)
    }

    /// Hex digest over names, kinds, roles and category lists.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for col in &self.columns {
            hasher.update(col.name.as_bytes());
            hasher.update([0u8]);
            hasher.update(match col.kind {
                ColumnKind::Numeric => b"n",
                ColumnKind::Categorical => b"c",
            });
            hasher.update(match col.role {
                ColumnRole::Feature => b"f",
                ColumnRole::Label => b"l",
            });
            for c in &col.categories {
                hasher.update(c.as_bytes());
                hasher.update([1u8]);
            }
            hasher.update([2u8]);
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Builds a new schema by taking columns in the given order.
    pub(crate) fn permuted(&self, order: &[usize]) -> Schema {
        let columns: Vec<ColumnSchema> = order.iter().map(|&i| self.columns[i].clone()).collect();
        let label = order.iter().position(|&i| i == self.label).expect("label kept");
        Schema { columns, label }
    }

    pub(crate) fn columns_mut(&mut self) -> &mut [ColumnSchema] {
        &mut self.columns
    }
}

/// A single table cell. Categorical cells hold an index into the column's
/// category list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(u32),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<usize> {
        match self {
            Cell::Cat(c) => Some(*c as usize),
            _ => None,
        }
    }
}

pub type Row = Vec<Cell>;

/// Immutable schema-typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            validate_row(&schema, row, r)?;
        }
        Ok(Dataset { schema, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    /// Skips validation; callers must uphold the row invariants.
    pub(crate) fn from_parts(schema: Schema, rows: Vec<Row>) -> Self {
        debug_assert!(rows
            .iter()
            .enumerate()
            .all(|(r, row)| validate_row(&schema, row, r).is_ok()));
        Dataset { schema, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn with_rows(&self, rows: Vec<Row>) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), rows)
    }

    /// Textual rendering of one cell; the empty string is the missing marker.
    pub fn render_cell(&self, column: usize, cell: &Cell) -> String {
        render_cell(self.schema.column(column), cell)
    }

    pub fn label_text(&self, row: usize) -> Option<&str> {
        let col = self.schema.label();
        self.rows[row][self.schema.label_index()]
            .as_cat()
            .map(|c| col.categories[c].as_str())
    }

    /// Indices of rows whose label equals `label`.
    pub fn rows_with_label(&self, label: &str) -> Result<Vec<usize>> {
        let code = label_code(&self.schema, label)?;
        let li = self.schema.label_index();
        Ok((0..self.rows.len())
            .filter(|&r| self.rows[r][li] == Cell::Cat(code as u32))
            .collect())
    }
}

pub(crate) fn render_cell(col: &ColumnSchema, cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => format_number(*v),
        Cell::Cat(c) => col.categories[*c as usize].clone(),
        Cell::Missing => String::new(),
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn label_code(schema: &Schema, label: &str) -> Result<usize> {
    let col = schema.label();
    if col.kind != ColumnKind::Categorical {
        return Err(PrroError::Schema(format!(
            "label column '{}' is not categorical",
            col.name
        )));
    }
    col.category_index(label)
        .ok_or_else(|| PrroError::UnknownLabel(label.to_string()))
}

fn validate_row(schema: &Schema, row: &Row, r: usize) -> Result<()> {
    if row.len() != schema.len() {
        return Err(PrroError::Cell {
            row: r,
            column: String::new(),
            message: format!("row has {} cells, schema has {}", row.len(), schema.len()),
        });
    }
    for (col, cell) in schema.columns().iter().zip(row) {
        let bad = |message: String| PrroError::Cell {
            row: r,
            column: col.name.clone(),
            message,
        };
        match (col.kind, cell) {
            (ColumnKind::Numeric, Cell::Num(v)) if !v.is_finite() => {
                return Err(bad(format!("non-finite value {v}")));
            }
            (ColumnKind::Categorical, Cell::Cat(c)) if *c as usize >= col.categories.len() => {
                return Err(bad(format!("category index {c} out of range")));
            }
            (ColumnKind::Numeric, Cell::Cat(_)) => {
                return Err(bad("categorical cell in numeric column".into()));
            }
            (ColumnKind::Categorical, Cell::Num(_)) => {
                return Err(bad("numeric cell in categorical column".into()));
            }
            _ => {}
        }
        if col.is_label() && cell.is_missing() {
            return Err(bad("missing label".into()));
        }
    }
    Ok(())
}

/// Row-wise concatenation; `a`'s rows come first. Categorical category lists
/// are merged by union with `a`'s order first.
pub fn concat(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    if !a.schema.same_layout(&b.schema) {
        return Err(PrroError::SchemaMismatch(format!(
            "cannot concatenate [{}] with [{}]",
            a.schema.names().join(", "),
            b.schema.names().join(", ")
        )));
    }
    let mut schema = a.schema.clone();
    // per-column remap of b's category codes into the merged list
    let mut remaps: Vec<Vec<u32>> = Vec::with_capacity(schema.len());
    for (col, bcol) in schema.columns_mut().iter_mut().zip(b.schema.columns()) {
        let mut remap = Vec::with_capacity(bcol.categories.len());
        for c in &bcol.categories {
            let idx = match col.category_index(c) {
                Some(i) => i,
                None => {
                    col.categories.push(c.clone());
                    col.categories.len() - 1
                }
            };
            remap.push(idx as u32);
        }
        remaps.push(remap);
    }
    let mut rows = Vec::with_capacity(a.rows.len() + b.rows.len());
    rows.extend(a.rows.iter().cloned());
    rows.extend(b.rows.iter().map(|row| {
        row.iter()
            .zip(&remaps)
            .map(|(cell, remap)| match cell {
                Cell::Cat(c) => Cell::Cat(remap[*c as usize]),
                other => *other,
            })
            .collect()
    }));
    Ok(Dataset { schema, rows })
}

/// Exact count of rows carrying the positive label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveRate {
    pub positives: usize,
    pub total: usize,
}

impl PositiveRate {
    /// 0 for the empty dataset (see [`PositiveRate::is_empty`]).
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.positives as f64 / self.total as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

impl fmt::Display for PositiveRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({:.4}%)", self.positives, self.total, 100.0 * self.value())
    }
}

pub fn positive_rate(dataset: &Dataset, positive_label: &str) -> Result<PositiveRate> {
    let positives = dataset.rows_with_label(positive_label)?.len();
    Ok(PositiveRate {
        positives,
        total: dataset.n_rows(),
    })
}
