//! Signal-based data pruning and the undersampling baselines it is compared
//! against.
//!
//! Pruning keeps every row of the class of interest and admits a
//! non-interest row only when its feature vector has Spearman correlation
//! strictly above `tau` with at least one interest row.

mod spearman;
mod undersample;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::table::{positive_rate, Cell, ColumnKind, Dataset, Schema};

pub use spearman::{average_ranks, spearman_rowcorr, RankProfile};
pub use undersample::{cluster_centroids, kmeans, random_undersample, KMeans};

pub const DEFAULT_TAU: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct PruningConfig {
    pub tau: f64,
    pub interest_label: String,
    /// Per categorical feature column: one ordinal code per category, in
    /// schema category order.
    pub ordinal_maps: BTreeMap<String, Vec<f64>>,
    /// Optional cap on how many interest rows each non-interest row is
    /// compared against.
    pub max_comparisons: Option<usize>,
}

impl PruningConfig {
    /// Ordinal codes default to the category position in the schema.
    pub fn new(schema: &Schema, tau: f64, interest_label: impl Into<String>) -> Self {
        let ordinal_maps = schema
            .feature_indices()
            .into_iter()
            .map(|i| schema.column(i))
            .filter(|c| c.kind == ColumnKind::Categorical)
            .map(|c| {
                (
                    c.name.clone(),
                    (0..c.categories.len()).map(|k| k as f64).collect(),
                )
            })
            .collect();
        PruningConfig {
            tau,
            interest_label: interest_label.into(),
            ordinal_maps,
            max_comparisons: None,
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if !(self.tau > -1.0 && self.tau < 1.0) {
            return Err(PrroError::Pruning(format!(
                "tau {} must lie strictly inside (-1, 1)",
                self.tau
            )));
        }
        for i in schema.feature_indices() {
            let col = schema.column(i);
            if col.kind != ColumnKind::Categorical {
                continue;
            }
            match self.ordinal_maps.get(&col.name) {
                Some(codes) if codes.len() == col.categories.len() => {
                    if codes.iter().any(|c| !c.is_finite()) {
                        return Err(PrroError::Pruning(format!(
                            "ordinal map for '{}' has a non-finite code",
                            col.name
                        )));
                    }
                }
                Some(codes) => {
                    return Err(PrroError::Pruning(format!(
                        "ordinal map for '{}' has {} codes for {} categories",
                        col.name,
                        codes.len(),
                        col.categories.len()
                    )))
                }
                None => {
                    return Err(PrroError::Pruning(format!(
                        "no ordinal map for categorical column '{}'",
                        col.name
                    )))
                }
            }
        }
        if self.max_comparisons == Some(0) {
            return Err(PrroError::Pruning("max_comparisons must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counts describing one pruning or undersampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub method: String,
    pub source_rows: usize,
    pub kept_interest: usize,
    pub kept_correlated: usize,
    pub pruned: usize,
    pub original_positive_rate: f64,
    pub resulting_positive_rate: f64,
    pub tau: Option<f64>,
}

impl PruneReport {
    /// Builds a report from a source and a result dataset; rows of the result
    /// not carrying `interest_label` count as kept non-interest rows.
    pub fn from_datasets(
        method: &str,
        source: &Dataset,
        result: &Dataset,
        interest_label: &str,
        tau: Option<f64>,
    ) -> Result<Self> {
        let before = positive_rate(source, interest_label)?;
        let after = positive_rate(result, interest_label)?;
        Ok(PruneReport {
            method: method.to_string(),
            source_rows: source.n_rows(),
            kept_interest: after.positives,
            kept_correlated: after.total - after.positives,
            pruned: source.n_rows().saturating_sub(after.total),
            original_positive_rate: before.value(),
            resulting_positive_rate: after.value(),
            tau,
        })
    }

    /// Flat `key = value` text, one field per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "source_rows = {}", self.source_rows);
        let _ = writeln!(out, "kept_interest = {}", self.kept_interest);
        let _ = writeln!(out, "kept_correlated = {}", self.kept_correlated);
        let _ = writeln!(out, "pruned = {}", self.pruned);
        let _ = writeln!(out, "original_positive_rate = {}", self.original_positive_rate);
        let _ = writeln!(out, "resulting_positive_rate = {}", self.resulting_positive_rate);
        if let Some(tau) = self.tau {
            let _ = writeln!(out, "tau = {tau}");
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| PrroError::Pruning(format!("bad report line '{line}'")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| PrroError::Pruning(format!("report lacks '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| PrroError::Pruning(format!("report field '{k}' is not a number")))
        };
        let count = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| PrroError::Pruning(format!("report field '{k}' is not a count")))
        };
        Ok(PruneReport {
            method: get("method")?,
            source_rows: count("source_rows")?,
            kept_interest: count("kept_interest")?,
            kept_correlated: count("kept_correlated")?,
            pruned: count("pruned")?,
            original_positive_rate: num("original_positive_rate")?,
            resulting_positive_rate: num("resulting_positive_rate")?,
            tau: if fields.contains_key("tau") {
                Some(num("tau")?)
            } else {
                None
            },
        })
    }
}

/// Maps rows to numeric feature vectors: numeric cells as-is, categoricals
/// through their ordinal map. Missing cells take the interest class's column
/// median (numeric) or modal category, which pruning never changes.
struct FeatureEncoder {
    features: Vec<usize>,
    fill: Vec<f64>,
    maps: Vec<Option<Vec<f64>>>,
}

impl FeatureEncoder {
    fn new(dataset: &Dataset, config: &PruningConfig, interest: &[usize]) -> Self {
        let schema = dataset.schema();
        let features = schema.feature_indices();
        let mut fill = Vec::with_capacity(features.len());
        let mut maps = Vec::with_capacity(features.len());
        for &j in &features {
            let col = schema.column(j);
            match col.kind {
                ColumnKind::Numeric => {
                    let mut values: Vec<f64> = interest
                        .iter()
                        .filter_map(|&r| dataset.rows()[r][j].as_num())
                        .collect();
                    if values.is_empty() {
                        values = dataset.rows().iter().filter_map(|row| row[j].as_num()).collect();
                    }
                    fill.push(median(&mut values).unwrap_or(0.0));
                    maps.push(None);
                }
                ColumnKind::Categorical => {
                    let codes = config.ordinal_maps[&col.name].clone();
                    let mut counts = vec![0usize; col.categories.len()];
                    for &r in interest {
                        if let Some(c) = dataset.rows()[r][j].as_cat() {
                            counts[c] += 1;
                        }
                    }
                    let mode = argmax_first(&counts).unwrap_or(0);
                    fill.push(codes.get(mode).copied().unwrap_or(0.0));
                    maps.push(Some(codes));
                }
            }
        }
        FeatureEncoder {
            features,
            fill,
            maps,
        }
    }

    fn encode(&self, row: &[Cell]) -> Vec<f64> {
        self.features
            .iter()
            .enumerate()
            .map(|(k, &j)| match (&row[j], &self.maps[k]) {
                (Cell::Num(v), _) => *v,
                (Cell::Cat(c), Some(codes)) => codes[*c as usize],
                _ => self.fill[k],
            })
            .collect()
    }
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub(crate) fn argmax_first(counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if best.is_none_or(|b| c > counts[b]) {
            best = Some(i);
        }
    }
    best
}

/// Signal-based pruning. Output rows: interest rows in source order, then
/// admitted non-interest rows in source order.
pub fn prune_signal(dataset: &Dataset, config: &PruningConfig) -> Result<(Dataset, PruneReport)> {
    let schema = dataset.schema();
    config.validate(schema)?;
    let interest = dataset.rows_with_label(&config.interest_label)?;
    if interest.is_empty() {
        return Err(PrroError::Pruning(format!(
            "no rows carry the interest label '{}'",
            config.interest_label
        )));
    }
    let n_features = schema.feature_indices().len();
    if n_features < 2 {
        return Err(PrroError::Pruning(format!(
            "Spearman correlation needs at least 2 feature columns, schema has {n_features}"
        )));
    }

    let encoder = FeatureEncoder::new(dataset, config, &interest);
    let interest_profiles: Vec<RankProfile> = interest
        .iter()
        .map(|&r| RankProfile::new(&encoder.encode(&dataset.rows()[r])))
        .collect();
    let compared = match config.max_comparisons {
        Some(cap) if cap < interest_profiles.len() => {
            log::warn!(
                "pruning compares each row against the first {cap} of {} interest rows",
                interest_profiles.len()
            );
            &interest_profiles[..cap]
        }
        _ => &interest_profiles[..],
    };

    let is_interest = {
        let mut flags = vec![false; dataset.n_rows()];
        for &r in &interest {
            flags[r] = true;
        }
        flags
    };
    let tau = config.tau;
    let admitted: Vec<usize> = (0..dataset.n_rows())
        .into_par_iter()
        .filter(|&r| !is_interest[r])
        .filter(|&r| {
            let profile = RankProfile::new(&encoder.encode(&dataset.rows()[r]));
            compared
                .iter()
                .any(|p| profile.corr(p).is_some_and(|rho| rho > tau))
        })
        .collect();

    let mut keep = interest;
    keep.extend(admitted);
    let result = dataset.select(&keep);
    let report = PruneReport::from_datasets("signal", dataset, &result, &config.interest_label, Some(tau))?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    fn schema(k: usize) -> Schema {
        let mut cols: Vec<ColumnSchema> = (0..k).map(|i| ColumnSchema::numeric(format!("f{i}"))).collect();
        cols.push(ColumnSchema::categorical("y", ["0", "1"]).as_label());
        Schema::new(cols).unwrap()
    }

    fn row(values: &[f64], label: u32) -> Vec<Cell> {
        let mut r: Vec<Cell> = values.iter().map(|&v| Cell::Num(v)).collect();
        r.push(Cell::Cat(label));
        r
    }

    #[test]
    fn copies_of_interest_rows_are_all_kept() {
        let pos = [[1.0, 2.0, 3.0, 4.0], [4.0, 1.0, 3.0, 2.0]];
        let mut rows: Vec<_> = pos.iter().map(|p| row(p, 1)).collect();
        for i in 0..10 {
            rows.push(row(&pos[i % 2], 0));
        }
        let d = Dataset::new(schema(4), rows).unwrap();
        let cfg = PruningConfig::new(d.schema(), 0.3, "1");
        let (out, report) = prune_signal(&d, &cfg).unwrap();
        assert_eq!(out.n_rows(), d.n_rows());
        assert_eq!(report.pruned, 0);
        assert_eq!(report.kept_interest + report.kept_correlated + report.pruned, d.n_rows());
    }

    #[test]
    fn reversed_rows_are_all_pruned() {
        let mut rows = vec![row(&[1.0, 2.0, 3.0, 4.0], 1), row(&[10.0, 20.0, 30.0, 40.0], 1)];
        for _ in 0..5 {
            rows.push(row(&[4.0, 3.0, 2.0, 1.0], 0));
        }
        let d = Dataset::new(schema(4), rows).unwrap();
        let (out, report) = prune_signal(&d, &PruningConfig::new(d.schema(), 0.3, "1")).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(report.pruned, 5);
        assert_eq!(report.resulting_positive_rate, 1.0);
    }

    #[test]
    fn output_order_is_interest_first() {
        let rows = vec![
            row(&[1.0, 2.0, 3.0], 0),
            row(&[1.0, 2.0, 3.0], 1),
            row(&[3.0, 2.0, 1.0], 0),
            row(&[1.0, 2.5, 3.0], 0),
        ];
        let d = Dataset::new(schema(3), rows.clone()).unwrap();
        let (out, _) = prune_signal(&d, &PruningConfig::new(d.schema(), 0.3, "1")).unwrap();
        assert_eq!(out.rows(), &[rows[1].clone(), rows[0].clone(), rows[3].clone()]);
    }

    #[test]
    fn threshold_is_strict() {
        // rho = 0.3 exactly must not pass tau = 0.3
        let rows = vec![
            row(&[1.0, 2.0, 3.0, 4.0, 5.0], 1),
            row(&[3.0, 1.0, 5.0, 2.0, 4.0], 0),
        ];
        let d = Dataset::new(schema(5), rows).unwrap();
        let (out, _) = prune_signal(&d, &PruningConfig::new(d.schema(), 0.3, "1")).unwrap();
        assert_eq!(out.n_rows(), 1);
        let (out, _) = prune_signal(&d, &PruningConfig::new(d.schema(), 0.29, "1")).unwrap();
        assert_eq!(out.n_rows(), 2);
    }

    #[test]
    fn errors() {
        let d = Dataset::new(schema(3), vec![row(&[1.0, 2.0, 3.0], 0)]).unwrap();
        assert!(prune_signal(&d, &PruningConfig::new(d.schema(), 0.3, "1")).is_err());
        assert!(prune_signal(&d, &PruningConfig::new(d.schema(), 1.0, "0")).is_err());
        let narrow = Dataset::new(schema(1), vec![row(&[1.0], 1)]).unwrap();
        assert!(prune_signal(&narrow, &PruningConfig::new(narrow.schema(), 0.3, "1")).is_err());
    }

    #[test]
    fn categorical_ordinal_codes_and_missing_fill() {
        let s = Schema::new(vec![
            ColumnSchema::numeric("a"),
            ColumnSchema::categorical("b", ["lo", "mid", "hi"]),
            ColumnSchema::numeric("c"),
            ColumnSchema::categorical("y", ["0", "1"]).as_label(),
        ])
        .unwrap();
        let rows = vec![
            vec![Cell::Num(0.0), Cell::Cat(1), Cell::Num(5.0), Cell::Cat(1)],
            vec![Cell::Num(-1.0), Cell::Cat(2), Cell::Missing, Cell::Cat(0)],
            vec![Cell::Num(9.0), Cell::Cat(0), Cell::Num(-3.0), Cell::Cat(0)],
        ];
        let d = Dataset::new(s, rows).unwrap();
        let mut cfg = PruningConfig::new(d.schema(), 0.3, "1");
        let (out, _) = prune_signal(&d, &cfg).unwrap();
        // row 1 encodes to (-1, 2, 5): ranks (1,2,3) like the interest row (0,1,5)
        assert_eq!(out.n_rows(), 2);
        cfg.ordinal_maps.insert("b".into(), vec![0.0, 1.0]);
        assert!(prune_signal(&d, &cfg).is_err());
    }

    #[test]
    fn report_text_round_trip() {
        let r = PruneReport {
            method: "signal".into(),
            source_rows: 10,
            kept_interest: 2,
            kept_correlated: 3,
            pruned: 5,
            original_positive_rate: 0.2,
            resulting_positive_rate: 0.4,
            tau: Some(0.3),
        };
        assert_eq!(PruneReport::parse_text(&r.to_text()).unwrap(), r);
    }
}
