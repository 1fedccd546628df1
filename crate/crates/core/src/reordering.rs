//! Column layouts for sequential generators: label-last / label-first
//! arrangements, permutation-importance ordering and the exact inverse.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::evaluation::{metrics, Predictor, DEFAULT_THRESHOLD};
use crate::table::{Dataset, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReorderMode {
    PredictorLast,
    PredictorFirst,
    Importance,
}

impl ReorderMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReorderMode::PredictorLast => "predictor_last",
            ReorderMode::PredictorFirst => "predictor_first",
            ReorderMode::Importance => "importance",
        }
    }
}

impl fmt::Display for ReorderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReorderMode {
    type Err = PrroError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predictor_last" => Ok(ReorderMode::PredictorLast),
            "predictor_first" => Ok(ReorderMode::PredictorFirst),
            "importance" => Ok(ReorderMode::Importance),
            other => Err(PrroError::Config(format!(
                "unknown reorder mode '{other}' (expected predictor_last, predictor_first or importance)"
            ))),
        }
    }
}

/// Record of a column rearrangement. `forward[i]` is the new position of
/// original column `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPermutation {
    forward: Vec<usize>,
    original_names: Vec<String>,
}

impl ColumnPermutation {
    pub fn new(forward: Vec<usize>, original_names: Vec<String>) -> Result<Self> {
        let p = ColumnPermutation {
            forward,
            original_names,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn identity(names: &[&str]) -> Self {
        ColumnPermutation {
            forward: (0..names.len()).collect(),
            original_names: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.forward.len();
        if self.original_names.len() != k {
            return Err(PrroError::Reorder(format!(
                "permutation maps {k} positions but names {} columns",
                self.original_names.len()
            )));
        }
        let mut seen = vec![false; k];
        for &j in &self.forward {
            if j >= k || std::mem::replace(&mut seen[j], true) {
                return Err(PrroError::Reorder("forward mapping is not a bijection".into()));
            }
        }
        Ok(())
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn original_names(&self) -> &[String] {
        &self.original_names
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Column names in the rearranged layout.
    pub fn target_names(&self) -> Vec<&str> {
        let mut out = vec![""; self.forward.len()];
        for (i, &j) in self.forward.iter().enumerate() {
            out[j] = &self.original_names[i];
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("permutation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ColumnPermutation =
            serde_json::from_str(text).map_err(|e| PrroError::Reorder(format!("permutation sidecar: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| PrroError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PrroError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Rebuilds `dataset` with columns taken in `order` (`order[new] = old`).
fn take_columns(dataset: &Dataset, order: &[usize]) -> Dataset {
    let schema = dataset.schema().permuted(order);
    let rows: Vec<Row> = dataset
        .rows()
        .iter()
        .map(|r| order.iter().map(|&i| r[i]).collect())
        .collect();
    Dataset::from_parts(schema, rows)
}

/// Applies an arbitrary column order and records it.
pub fn reorder_columns(dataset: &Dataset, order: &[usize]) -> Result<(Dataset, ColumnPermutation)> {
    let k = dataset.schema().len();
    let mut forward = vec![usize::MAX; k];
    if order.len() != k {
        return Err(PrroError::Reorder(format!("order lists {} of {k} columns", order.len())));
    }
    for (new, &old) in order.iter().enumerate() {
        if old >= k || forward[old] != usize::MAX {
            return Err(PrroError::Reorder("column order is not a permutation".into()));
        }
        forward[old] = new;
    }
    let names = dataset.schema().names().iter().map(|s| s.to_string()).collect();
    Ok((
        take_columns(dataset, order),
        ColumnPermutation {
            forward,
            original_names: names,
        },
    ))
}

pub fn reorder_predictor_last(dataset: &Dataset) -> (Dataset, ColumnPermutation) {
    let schema = dataset.schema();
    let mut order = schema.feature_indices();
    order.push(schema.label_index());
    reorder_columns(dataset, &order).expect("features plus label is a permutation")
}

pub fn reorder_predictor_first(dataset: &Dataset) -> (Dataset, ColumnPermutation) {
    let schema = dataset.schema();
    let mut order = vec![schema.label_index()];
    order.extend(schema.feature_indices());
    reorder_columns(dataset, &order).expect("label plus features is a permutation")
}

/// Restores the column order recorded in `permutation`.
pub fn inverse_reorder(dataset: &Dataset, permutation: &ColumnPermutation) -> Result<Dataset> {
    let have = dataset.schema().names();
    let want = permutation.target_names();
    if have != want {
        return Err(PrroError::Reorder(format!(
            "dataset columns [{}] do not match the permutation's layout [{}]",
            have.join(", "),
            want.join(", ")
        )));
    }
    Ok(take_columns(dataset, &permutation.forward))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMetric {
    #[default]
    Accuracy,
    F1,
}

impl FromStr for ImportanceMetric {
    type Err = PrroError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(ImportanceMetric::Accuracy),
            "f1" => Ok(ImportanceMetric::F1),
            other => Err(PrroError::Config(format!("unknown importance metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportanceConfig {
    pub repeats: usize,
    pub metric: ImportanceMetric,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            repeats: 5,
            metric: ImportanceMetric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Feature names in dataset order.
    pub features: Vec<String>,
    /// Mean metric drop per feature, aligned with `features`.
    pub scores: Vec<f64>,
    /// Feature names, least important first. Ties keep dataset order.
    pub order: Vec<String>,
}

impl FeatureRanking {
    pub fn from_scores(features: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if features.len() != scores.len() {
            return Err(PrroError::Reorder(format!(
                "{} scores for {} features",
                scores.len(),
                features.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(PrroError::Reorder(format!("score for '{}' is not finite", features[i])));
        }
        let mut idx: Vec<usize> = (0..features.len()).collect();
        idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let order = idx.iter().map(|&i| features[i].clone()).collect();
        Ok(FeatureRanking {
            features,
            scores,
            order,
        })
    }

    pub fn score(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|i| self.scores[i])
    }
}

fn score_with<P: Predictor + ?Sized>(clf: &P, dataset: &Dataset, metric: ImportanceMetric) -> Result<f64> {
    let m = metrics(clf, dataset, DEFAULT_THRESHOLD)?;
    Ok(match metric {
        ImportanceMetric::Accuracy => m.accuracy,
        ImportanceMetric::F1 => m.f1,
    })
}

/// Score of feature `f` is the baseline metric minus the mean metric after
/// shuffling that column. The k-th feature column draws its shuffles from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, one `shuffle` of the
/// row index vector per repeat.
pub fn permutation_importance<P: Predictor + Sync + ?Sized>(
    classifier: &P,
    dataset: &Dataset,
    seed: u64,
    config: &ImportanceConfig,
) -> Result<FeatureRanking> {
    if config.repeats == 0 {
        return Err(PrroError::Reorder("importance needs at least one repeat".into()));
    }
    if dataset.is_empty() {
        return Err(PrroError::Reorder("importance needs a non-empty dataset".into()));
    }
    let baseline = score_with(classifier, dataset, config.metric)?;
    let features = dataset.schema().feature_indices();
    let n = dataset.n_rows();
    let scores: Vec<f64> = features
        .par_iter()
        .enumerate()
        .map(|(k, &j)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut total = 0.0;
            for _ in 0..config.repeats {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let rows: Vec<Row> = (0..n)
                    .map(|r| {
                        let mut row = dataset.rows()[r].clone();
                        row[j] = dataset.rows()[perm[r]][j];
                        row
                    })
                    .collect();
                let shuffled = Dataset::from_parts(dataset.schema().clone(), rows);
                total += score_with(classifier, &shuffled, config.metric)?;
            }
            Ok(baseline - total / config.repeats as f64)
        })
        .collect::<Result<_>>()?;
    let names = features
        .iter()
        .map(|&j| dataset.schema().column(j).name.clone())
        .collect();
    FeatureRanking::from_scores(names, scores)
}

/// Features in ranking order (most important right before the label), label last.
pub fn reorder_by_ranking(dataset: &Dataset, ranking: &FeatureRanking) -> Result<(Dataset, ColumnPermutation)> {
    let schema = dataset.schema();
    let features = schema.feature_indices();
    let mut order = Vec::with_capacity(schema.len());
    for name in &ranking.order {
        match schema.index_of(name) {
            Some(j) if !schema.column(j).is_label() => order.push(j),
            _ => {
                return Err(PrroError::Reorder(format!(
                    "ranked feature '{name}' is not a feature of the dataset"
                )))
            }
        }
    }
    if order.len() != features.len() {
        return Err(PrroError::Reorder(format!(
            "ranking covers {} of {} features",
            order.len(),
            features.len()
        )));
    }
    order.push(schema.label_index());
    reorder_columns(dataset, &order)
}

pub fn reorder_by_importance<P: Predictor + Sync + ?Sized>(
    dataset: &Dataset,
    classifier: &P,
    seed: u64,
    config: &ImportanceConfig,
) -> Result<(Dataset, ColumnPermutation, FeatureRanking)> {
    let ranking = permutation_importance(classifier, dataset, seed, config)?;
    let (out, perm) = reorder_by_ranking(dataset, &ranking)?;
    Ok((out, perm, ranking))
}

/// Dispatches on `mode`. Importance mode needs a fitted classifier.
pub fn reorder<P: Predictor + Sync + ?Sized>(
    dataset: &Dataset,
    mode: ReorderMode,
    classifier: Option<&P>,
    seed: u64,
    config: &ImportanceConfig,
) -> Result<(Dataset, ColumnPermutation)> {
    match mode {
        ReorderMode::PredictorLast => Ok(reorder_predictor_last(dataset)),
        ReorderMode::PredictorFirst => Ok(reorder_predictor_first(dataset)),
        ReorderMode::Importance => {
            let clf = classifier.ok_or_else(|| PrroError::Reorder("importance mode needs a classifier".into()))?;
            reorder_by_importance(dataset, clf, seed, config).map(|(d, p, _)| (d, p))
        }
    }
}
