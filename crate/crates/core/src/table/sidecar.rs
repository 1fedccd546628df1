//! Schema sidecar: a small TOML key-value file that pins column kinds,
//! category order, the label column and the positive label.
//!
//! ```toml
//! label = "click"
//! positive = "1"
//!
//! [[columns]]
//! name = "age"
//! kind = "numeric"
//!
//! [[columns]]
//! name = "click"
//! kind = "categorical"
//! categories = ["0", "1"]
//! ```
//!
//! When `columns` is present it must list every CSV column in file order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnRole, ColumnSchema, Schema};
use crate::error::{PrroError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaSidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<SidecarColumn>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarColumn {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl SchemaSidecar {
    pub fn from_schema(schema: &Schema, positive: Option<&str>) -> Self {
        SchemaSidecar {
            label: Some(schema.label().name.clone()),
            positive: positive.map(str::to_string),
            columns: Some(
                schema
                    .columns()
                    .iter()
                    .map(|c| SidecarColumn {
                        name: c.name.clone(),
                        kind: c.kind,
                        categories: c.categories.clone(),
                    })
                    .collect(),
            ),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PrroError::Schema(format!("sidecar: {e}")))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("sidecar serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| PrroError::io(path, e))
    }

    /// Fully pinned schema, if the sidecar lists columns.
    pub fn pinned_schema(&self) -> Result<Option<Schema>> {
        let Some(columns) = &self.columns else {
            return Ok(None);
        };
        let label = self
            .label
            .as_deref()
            .ok_or_else(|| PrroError::Schema("sidecar lists columns but no label".into()))?;
        if !columns.iter().any(|c| c.name == label) {
            return Err(PrroError::Schema(format!(
                "label '{label}' is not among the sidecar columns"
            )));
        }
        let cols = columns
            .iter()
            .map(|c| ColumnSchema {
                name: c.name.clone(),
                kind: c.kind,
                categories: c.categories.clone(),
                role: if c.name == label {
                    ColumnRole::Label
                } else {
                    ColumnRole::Feature
                },
            })
            .collect();
        Schema::new(cols).map(Some)
    }
}

pub fn load_sidecar(path: &Path) -> Result<SchemaSidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| PrroError::io(path, e))?;
    SchemaSidecar::parse(&text)
}

/// `data.csv` -> `data.schema.toml`.
pub fn sidecar_path_for(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.schema.toml"))
}
