//! Row <-> sentence codec. A row encodes as `name: value, name: value, ...`
//! in schema order; parsing matches segments by column name.
//!
//! Inside names and values a backslash escapes `\`, `,` and `:`, and `\n` /
//! `\r` stand for line breaks, so one sentence always fits on one line.

use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::table::{format_number, Cell, ColumnKind, Dataset, Row, Schema};

pub const SCHEMA_COMMENT: &str = "#schema:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub text: String,
    pub source_schema_hash: String,
}

/// Which names label the segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameMode {
    #[default]
    Real,
    /// `Column 1`, `Column 2`, ... in schema order.
    Placeholder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailAction {
    /// Abort the whole corpus.
    Reject,
    /// Record the line and keep going.
    DropRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownCategoryAction {
    Reject,
    /// Closest known category by edit distance, first on ties.
    CoerceToNearest,
    DropRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParsePolicy {
    pub on_unknown_category: UnknownCategoryAction,
    pub on_numeric_parse_fail: FailAction,
    /// Also governs segments naming a column the schema lacks.
    pub on_missing_column: FailAction,
    pub max_reject_fraction: f64,
}

impl Default for ParsePolicy {
    fn default() -> Self {
        ParsePolicy {
            on_unknown_category: UnknownCategoryAction::DropRow,
            on_numeric_parse_fail: FailAction::DropRow,
            on_missing_column: FailAction::DropRow,
            max_reject_fraction: 0.2,
        }
    }
}

impl ParsePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.max_reject_fraction) {
            return Err(PrroError::Config(format!(
                "max_reject_fraction must lie in [0, 1], got {}",
                self.max_reject_fraction
            )));
        }
        Ok(())
    }
}

/// One line the parser could not turn into a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub line_no: usize,
    pub text: String,
    pub reason: String,
    pub column: Option<String>,
    /// Set when the policy says this failure aborts the corpus.
    #[serde(skip)]
    pub fatal: bool,
}

impl fmt::Display for RejectRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_no, self.reason)
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            ',' => out.push_str("\\,"),
            ':' => out.push_str("\\:"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            match chars.next()? {
                '\\' => out.push('\\'),
                ',' => out.push(','),
                ':' => out.push(':'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                _ => return None,
            }
        } else {
            out.push(ch);
        }
    }
    Some(out)
}

/// Splits on `sep` where it is not escaped. Escapes are kept.
fn split_unescaped(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, ch) in text.char_indices() {
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == sep {
            parts.push(&text[start..i]);
            start = i + ch.len_utf8();
        }
    }
    parts.push(&text[start..]);
    parts
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(ca != cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Encoder and parser bound to one schema.
#[derive(Debug, Clone)]
pub struct Codec<'a> {
    schema: &'a Schema,
    names: Vec<String>,
    lookup: HashMap<String, usize>,
    digest: String,
}

impl<'a> Codec<'a> {
    pub fn new(schema: &'a Schema, mode: NameMode) -> Self {
        let names: Vec<String> = match mode {
            NameMode::Real => schema.names().iter().map(|s| s.to_string()).collect(),
            NameMode::Placeholder => (1..=schema.len()).map(|i| format!("Column {i}")).collect(),
        };
        let lookup = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Codec {
            schema,
            names,
            lookup,
            digest: schema.digest(),
        }
    }

    pub fn encode(&self, row: &Row) -> EncodedRow {
        let mut text = String::new();
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                text.push_str(", ");
            }
            text.push_str(&escape(&self.names[j]));
            text.push_str(": ");
            let value = match cell {
                Cell::Num(v) => format_number(*v),
                Cell::Cat(c) => escape(&self.schema.column(j).categories[*c as usize]),
                Cell::Missing => String::new(),
            };
            text.push_str(&value);
        }
        EncodedRow {
            text,
            source_schema_hash: self.digest.clone(),
        }
    }

    /// Never panics on arbitrary input. `line_no` is copied into any reject.
    pub fn parse(&self, text: &str, policy: &ParsePolicy, line_no: usize) -> std::result::Result<Row, RejectRecord> {
        let reject = |reason: String, column: Option<&str>, fatal: bool| RejectRecord {
            line_no,
            text: text.to_string(),
            reason,
            column: column.map(str::to_string),
            fatal,
        };
        let missing_fatal = policy.on_missing_column == FailAction::Reject;
        let mut row: Vec<Option<Cell>> = vec![None; self.schema.len()];
        for (s, raw) in split_unescaped(text, ',').into_iter().enumerate() {
            let segment = if s == 0 {
                raw
            } else {
                match raw.strip_prefix(' ') {
                    Some(rest) => rest,
                    None => return Err(reject(format!("segment {} is not preceded by ', '", s + 1), None, false)),
                }
            };
            let pieces = split_unescaped(segment, ':');
            if pieces.len() != 2 {
                return Err(reject(format!("malformed segment '{segment}'"), None, false));
            }
            let Some(value) = pieces[1].strip_prefix(' ') else {
                return Err(reject(format!("segment '{segment}' lacks ': '"), None, false));
            };
            let (Some(name), Some(value)) = (unescape(pieces[0]), unescape(value)) else {
                return Err(reject(format!("bad escape in segment '{segment}'"), None, false));
            };
            let Some(&j) = self.lookup.get(&name) else {
                return Err(reject(format!("unknown column '{name}'"), Some(&name), missing_fatal));
            };
            if row[j].is_some() {
                return Err(reject(format!("column '{name}' appears twice"), Some(&name), false));
            }
            let col = self.schema.column(j);
            let cell = if value.is_empty() {
                if col.is_label() {
                    return Err(reject(format!("label column '{name}' is empty"), Some(&name), missing_fatal));
                }
                Cell::Missing
            } else {
                match col.kind {
                    ColumnKind::Numeric => match value.parse::<f64>() {
                        Ok(v) if v.is_finite() => Cell::Num(v),
                        _ => {
                            return Err(reject(
                                format!("'{value}' is not a number"),
                                Some(&name),
                                policy.on_numeric_parse_fail == FailAction::Reject,
                            ))
                        }
                    },
                    ColumnKind::Categorical => match col.category_index(&value) {
                        Some(c) => Cell::Cat(c as u32),
                        None => match policy.on_unknown_category {
                            UnknownCategoryAction::CoerceToNearest if !col.categories.is_empty() => {
                                let best = (0..col.categories.len())
                                    .min_by_key(|&c| levenshtein(&value, &col.categories[c]))
                                    .expect("non-empty");
                                Cell::Cat(best as u32)
                            }
                            action => {
                                return Err(reject(
                                    format!("unknown category '{value}'"),
                                    Some(&name),
                                    action == UnknownCategoryAction::Reject,
                                ))
                            }
                        },
                    },
                }
            };
            row[j] = Some(cell);
        }
        if let Some(j) = row.iter().position(Option::is_none) {
            let name = &self.names[j];
            return Err(reject(format!("column '{name}' is missing"), Some(name), missing_fatal));
        }
        Ok(row.into_iter().map(|c| c.expect("checked")).collect())
    }
}

pub fn encode_row(row: &Row, schema: &Schema) -> EncodedRow {
    Codec::new(schema, NameMode::Real).encode(row)
}

pub fn parse_sentence(text: &str, schema: &Schema, policy: &ParsePolicy) -> std::result::Result<Row, RejectRecord> {
    Codec::new(schema, NameMode::Real).parse(text, policy, 1)
}

pub fn encode_dataset(dataset: &Dataset, mode: NameMode) -> Vec<EncodedRow> {
    let codec = Codec::new(dataset.schema(), mode);
    dataset.rows().par_iter().map(|r| codec.encode(r)).collect()
}

/// Parses `(line_no, text)` pairs, keeping accepted rows in input order.
fn parse_numbered(
    lines: &[(usize, &str)],
    schema: &Schema,
    policy: &ParsePolicy,
    mode: NameMode,
) -> Result<(Dataset, Vec<RejectRecord>)> {
    policy.validate()?;
    let codec = Codec::new(schema, mode);
    let parsed: Vec<_> = lines
        .par_iter()
        .map(|&(no, text)| codec.parse(text, policy, no))
        .collect();
    let mut rows = Vec::with_capacity(parsed.len());
    let mut rejects = Vec::new();
    for p in parsed {
        match p {
            Ok(row) => rows.push(row),
            Err(r) if r.fatal => return Err(PrroError::Corpus(format!("rejected {r}"))),
            Err(r) => rejects.push(r),
        }
    }
    if !lines.is_empty() {
        let frac = rejects.len() as f64 / lines.len() as f64;
        if frac > policy.max_reject_fraction {
            let first = rejects.first().map(|r| format!("; first: {r}")).unwrap_or_default();
            return Err(PrroError::Corpus(format!(
                "{} of {} lines rejected ({:.1}% > {:.1}% allowed){first}",
                rejects.len(),
                lines.len(),
                frac * 100.0,
                policy.max_reject_fraction * 100.0
            )));
        }
    }
    Ok((Dataset::from_parts(schema.clone(), rows), rejects))
}

/// Reject line numbers count from 1 in `texts`.
pub fn parse_corpus<S: AsRef<str> + Sync>(
    texts: &[S],
    schema: &Schema,
    policy: &ParsePolicy,
    mode: NameMode,
) -> Result<(Dataset, Vec<RejectRecord>)> {
    let lines: Vec<(usize, &str)> = texts.iter().enumerate().map(|(i, t)| (i + 1, t.as_ref())).collect();
    parse_numbered(&lines, schema, policy, mode)
}

pub fn corpus_text(rows: &[EncodedRow], schema_comment: bool) -> String {
    let mut out = String::new();
    if schema_comment {
        if let Some(first) = rows.first() {
            out.push_str(SCHEMA_COMMENT);
            out.push_str(&first.source_schema_hash);
            out.push('\n');
        }
    }
    for r in rows {
        out.push_str(&r.text);
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, dataset: &Dataset, mode: NameMode) -> Result<()> {
    let rows = encode_dataset(dataset, mode);
    let mut text = corpus_text(&rows, false);
    text.insert_str(0, &format!("{SCHEMA_COMMENT}{}\n", dataset.schema().digest()));
    std::fs::write(path, text).map_err(|e| PrroError::io(path, e))
}

/// Reads a corpus file. A leading `#schema:` line must match `schema`;
/// a CR before each LF is tolerated and blank lines are skipped.
pub fn load_corpus(
    path: &Path,
    schema: &Schema,
    policy: &ParsePolicy,
    mode: NameMode,
) -> Result<(Dataset, Vec<RejectRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| PrroError::io(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if i == 0 {
            if let Some(digest) = line.strip_prefix(SCHEMA_COMMENT) {
                let want = schema.digest();
                if digest.trim() != want {
                    return Err(PrroError::Corpus(format!(
                        "{} was encoded for schema {}, expected {want}",
                        path.display(),
                        digest.trim()
                    )));
                }
                continue;
            }
        }
        if !line.is_empty() {
            lines.push((i + 1, line));
        }
    }
    parse_numbered(&lines, schema, policy, mode)
}

/// One JSON object per line: `{line_no, text, reason, column}`.
pub fn write_rejects(path: &Path, rejects: &[RejectRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in rejects {
        serde_json::to_writer(&mut out, r).expect("reject serializes");
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| PrroError::io(path, e))?;
    f.write_all(&out).map_err(|e| PrroError::io(path, e))
}

impl FromStr for FailAction {
    type Err = PrroError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(FailAction::Reject),
            "drop_row" => Ok(FailAction::DropRow),
            other => Err(PrroError::Config(format!("unknown parse action '{other}'"))),
        }
    }
}
