use std::io::{Read, Write};
use std::path::Path;

use super::{render_cell, Cell, ColumnKind, ColumnSchema, Dataset, Row, Schema};
use crate::error::{PrroError, Result};

/// How the schema of a CSV is obtained.
#[derive(Debug, Clone)]
pub enum SchemaSource {
    /// Header must match the schema's column names in order.
    Pinned(Schema),
    /// Columns whose non-empty cells all parse as finite numbers become
    /// numeric; everything else (and the label) becomes categorical with
    /// categories in sorted order.
    Infer { label: String },
}

pub fn load_csv(path: &Path, source: &SchemaSource) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| PrroError::io(path, e))?;
    read_csv(std::io::BufReader::new(file), source, path)
}

/// Row numbers in errors are 1-based data rows (the header is not counted).
pub fn read_csv<R: Read>(reader: R, source: &SchemaSource, origin: &Path) -> Result<Dataset> {
    let csv_err = |e: csv::Error| PrroError::Csv {
        path: origin.to_path_buf(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(PrroError::HeaderMismatch(format!(
            "{} has no header row",
            origin.display()
        )));
    }
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        records.push(rec.iter().map(str::to_string).collect());
    }

    let schema = match source {
        SchemaSource::Pinned(schema) => {
            let names = schema.names();
            if names != header.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(PrroError::HeaderMismatch(format!(
                    "header [{}] does not match schema [{}]",
                    header.join(", "),
                    names.join(", ")
                )));
            }
            schema.clone()
        }
        SchemaSource::Infer { label } => infer_schema(&header, &records, label)?,
    };

    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        rows.push(parse_record(&schema, rec, r + 1)?);
    }
    Dataset::new(schema, rows)
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn infer_schema(header: &[String], records: &[Vec<String>], label: &str) -> Result<Schema> {
    if !header.iter().any(|h| h == label) {
        return Err(PrroError::HeaderMismatch(format!(
            "label column '{label}' not in header [{}]",
            header.join(", ")
        )));
    }
    let columns = header
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let is_label = name == label;
            let numeric = !is_label
                && records
                    .iter()
                    .all(|rec| rec[j].is_empty() || parse_number(&rec[j]).is_some());
            if numeric {
                ColumnSchema::numeric(name.clone())
            } else {
                let mut cats: Vec<String> = records
                    .iter()
                    .map(|rec| rec[j].clone())
                    .filter(|v| !v.is_empty())
                    .collect();
                cats.sort();
                cats.dedup();
                let col = ColumnSchema::categorical(name.clone(), cats);
                if is_label {
                    col.as_label()
                } else {
                    col
                }
            }
        })
        .collect();
    Schema::new(columns)
}

fn parse_record(schema: &Schema, rec: &[String], row: usize) -> Result<Row> {
    schema
        .columns()
        .iter()
        .zip(rec)
        .map(|(col, text)| {
            if text.is_empty() {
                if col.is_label() {
                    return Err(PrroError::Cell {
                        row,
                        column: col.name.clone(),
                        message: "missing label".into(),
                    });
                }
                return Ok(Cell::Missing);
            }
            match col.kind {
                ColumnKind::Numeric => parse_number(text).map(Cell::Num).ok_or_else(|| {
                    PrroError::NumericParse {
                        row,
                        column: col.name.clone(),
                        value: text.clone(),
                    }
                }),
                ColumnKind::Categorical => col
                    .category_index(text)
                    .map(|c| Cell::Cat(c as u32))
                    .ok_or_else(|| PrroError::Cell {
                        row,
                        column: col.name.clone(),
                        message: format!("'{text}' is not a declared category"),
                    }),
            }
        })
        .collect()
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| PrroError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(dataset, &mut w, path)?;
    w.flush().map_err(|e| PrroError::io(path, e))
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W, origin: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| PrroError::Csv {
        path: origin.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(dataset.schema().names()).map_err(csv_err)?;
    for row in dataset.rows() {
        w.write_record(
            dataset
                .schema()
                .columns()
                .iter()
                .zip(row)
                .map(|(col, cell)| render_cell(col, cell)),
        )
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| PrroError::io(origin, e))
}
