//! Binary classifiers: logistic regression, a CART decision tree, and
//! Gaussian naive Bayes. All three bind to the feature columns (by name)
//! of the dataset they were trained on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::pruning::median;
use crate::table::{ColumnKind, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    DecisionTree,
    GaussianNb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::GaussianNb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::GaussianNb => "gaussian_nb",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = PrroError;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PrroError::Config(format!("unknown classifier kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub max_iter: usize,
    /// Stop once the largest gradient component falls below this.
    pub tol: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 500,
            tol: 1e-6,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesConfig {
    /// Added to every variance, scaled by the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub naive_bayes: NaiveBayesConfig,
}

/// Anything that scores rows with a class-1 probability.
pub trait Predictor {
    fn predict_proba(&self, dataset: &Dataset) -> Result<Vec<f64>>;
    fn positive_label(&self) -> &str;
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl Matrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BoundColumn {
    name: String,
    kind: ColumnKind,
    categories: Vec<String>,
    /// Training median, used for missing numeric cells.
    fill: f64,
}

/// Feature layout fixed at training time. Categoricals expand to one-hot
/// indicators; missing or unseen categories encode as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBinding {
    columns: Vec<BoundColumn>,
}

impl FeatureBinding {
    pub fn fit(dataset: &Dataset) -> Self {
        let schema = dataset.schema();
        let columns = schema
            .feature_indices()
            .into_iter()
            .map(|j| {
                let col = schema.column(j);
                let fill = if col.kind == ColumnKind::Numeric {
                    let mut v: Vec<f64> = dataset.rows().iter().filter_map(|r| r[j].as_num()).collect();
                    median(&mut v).unwrap_or(0.0)
                } else {
                    0.0
                };
                BoundColumn {
                    name: col.name.clone(),
                    kind: col.kind,
                    categories: col.categories.clone(),
                    fill,
                }
            })
            .collect();
        FeatureBinding { columns }
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical => c.categories.len(),
            })
            .sum()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Encodes `dataset`, matching feature columns by name.
    pub fn encode(&self, dataset: &Dataset) -> Result<Matrix> {
        let schema = dataset.schema();
        let mut plan = Vec::with_capacity(self.columns.len());
        for bound in &self.columns {
            let j = schema.index_of(&bound.name).ok_or_else(|| {
                PrroError::SchemaMismatch(format!("classifier feature '{}' is absent", bound.name))
            })?;
            let col = schema.column(j);
            if col.kind != bound.kind || col.is_label() {
                return Err(PrroError::SchemaMismatch(format!(
                    "column '{}' changed kind or role since training",
                    bound.name
                )));
            }
            // dataset category code -> bound one-hot slot
            let remap: Vec<Option<usize>> = col
                .categories
                .iter()
                .map(|c| bound.categories.iter().position(|b| b == c))
                .collect();
            plan.push((j, remap));
        }
        let n_cols = self.width();
        let mut data = Vec::with_capacity(dataset.n_rows() * n_cols);
        for row in dataset.rows() {
            for (bound, (j, remap)) in self.columns.iter().zip(&plan) {
                match bound.kind {
                    ColumnKind::Numeric => data.push(row[*j].as_num().unwrap_or(bound.fill)),
                    ColumnKind::Categorical => {
                        let slot = row[*j].as_cat().and_then(|c| remap[c]);
                        data.extend((0..bound.categories.len()).map(|k| f64::from(u8::from(slot == Some(k)))));
                    }
                }
            }
        }
        Ok(Matrix {
            data,
            n_rows: dataset.n_rows(),
            n_cols,
        })
    }
}

/// 1.0 where the label equals `positive_label`.
pub fn binary_targets(dataset: &Dataset, positive_label: &str) -> Result<Vec<f64>> {
    let code = crate::table::label_code(dataset.schema(), positive_label)?;
    let li = dataset.schema().label_index();
    Ok(dataset
        .rows()
        .iter()
        .map(|r| f64::from(u8::from(r[li].as_cat() == Some(code))))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Logistic {
        weights: Vec<f64>,
        bias: f64,
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    Tree(Vec<TreeNode>),
    GaussianNb {
        log_prior: [f64; 2],
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    kind: ClassifierKind,
    binding: FeatureBinding,
    positive_label: String,
    model: Model,
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn binding(&self) -> &FeatureBinding {
        &self.binding
    }

    /// Tree depth (0 for a single leaf); `None` for other kinds.
    pub fn tree_depth(&self) -> Option<usize> {
        fn depth(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf(_) => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(nodes, left).max(depth(nodes, right)),
            }
        }
        match &self.model {
            Model::Tree(nodes) => Some(depth(nodes, 0)),
            _ => None,
        }
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        match &self.model {
            Model::Logistic {
                weights,
                bias,
                mean,
                scale,
            } => {
                let z = bias
                    + x.iter()
                        .zip(weights)
                        .zip(mean.iter().zip(scale))
                        .map(|((v, w), (m, s))| w * (v - m) / s)
                        .sum::<f64>();
                sigmoid(z)
            }
            Model::Tree(nodes) => {
                let mut i = 0;
                loop {
                    match nodes[i] {
                        TreeNode::Leaf(p) => return p,
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => i = if x[feature] <= threshold { left } else { right },
                    }
                }
            }
            Model::GaussianNb { log_prior, mean, var } => {
                let ll = |c: usize| {
                    log_prior[c]
                        + x.iter()
                            .zip(&mean[c])
                            .zip(&var[c])
                            .map(|((v, m), s2)| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2))
                            .sum::<f64>()
                };
                sigmoid(ll(1) - ll(0))
            }
        }
    }
}

impl Predictor for Classifier {
    fn predict_proba(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        let x = self.binding.encode(dataset)?;
        Ok((0..x.n_rows).map(|i| self.score_row(x.row(i))).collect())
    }

    fn positive_label(&self) -> &str {
        &self.positive_label
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy of a logistic model plus `l2/2 * |w|^2`, and its
/// gradient `(dw, db)`. Inputs are the already standardized features.
pub fn logistic_objective(x: &Matrix, y: &[f64], weights: &[f64], bias: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; x.n_cols];
    let mut grad_b = 0.0;
    for i in 0..x.n_rows {
        let row = x.row(i);
        let z = bias + row.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>();
        // log(1 + e^z) - y z, computed without overflow
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += softplus - y[i] * z;
        let r = sigmoid(z) - y[i];
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad, grad_b)
}

fn standardize(x: &Matrix) -> (Matrix, Vec<f64>, Vec<f64>) {
    let n = x.n_rows as f64;
    let mut mean = vec![0.0; x.n_cols];
    for i in 0..x.n_rows {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = vec![0.0; x.n_cols];
    for i in 0..x.n_rows {
        for ((s, v), m) in scale.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    scale.iter_mut().for_each(|s| {
        let sd = (*s / n).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    });
    let mut z = x.clone();
    for i in 0..z.n_rows {
        for k in 0..z.n_cols {
            let v = &mut z.data[i * z.n_cols + k];
            *v = (*v - mean[k]) / scale[k];
        }
    }
    (z, mean, scale)
}

fn fit_logistic(x: &Matrix, y: &[f64], cfg: &LogisticConfig) -> Model {
    let (z, mean, scale) = standardize(x);
    let mut w = vec![0.0; z.n_cols];
    let mut b = 0.0;
    let (mut loss, mut gw, mut gb) = logistic_objective(&z, y, &w, b, cfg.l2);
    let mut step: f64 = 1.0;
    for _ in 0..cfg.max_iter {
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < cfg.tol {
            break;
        }
        let gnorm2 = gb * gb + gw.iter().map(|g| g * g).sum::<f64>();
        // Armijo backtracking
        step = (step * 2.0).min(16.0);
        loop {
            let w_try: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let b_try = b - step * gb;
            let (l_try, gw_try, gb_try) = logistic_objective(&z, y, &w_try, b_try, cfg.l2);
            if l_try <= loss - 0.5 * step * gnorm2 || step < 1e-10 {
                w = w_try;
                b = b_try;
                loss = l_try;
                gw = gw_try;
                gb = gb_try;
                break;
            }
            step *= 0.5;
        }
    }
    Model::Logistic {
        weights: w,
        bias: b,
        mean,
        scale,
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

fn fit_tree(x: &Matrix, y: &[f64], cfg: &TreeConfig) -> Model {
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..x.n_rows).collect();
    grow(x, y, cfg, all, 0, &mut nodes);
    Model::Tree(nodes)
}

fn grow(x: &Matrix, y: &[f64], cfg: &TreeConfig, idx: Vec<usize>, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let n = idx.len() as f64;
    let pos: f64 = idx.iter().map(|&i| y[i]).sum();
    let me = nodes.len();
    nodes.push(TreeNode::Leaf(if n > 0.0 { pos / n } else { 0.0 }));
    let min_leaf = cfg.min_leaf.max(1);
    if depth >= cfg.max_depth || idx.len() < 2 * min_leaf || pos == 0.0 || pos == n {
        return me;
    }
    let parent = gini(pos, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.clone();
    for f in 0..x.n_cols {
        sorted.sort_by(|&a, &b| x.data[a * x.n_cols + f].total_cmp(&x.data[b * x.n_cols + f]));
        let mut left_pos = 0.0;
        for k in 0..sorted.len() - 1 {
            left_pos += y[sorted[k]];
            let left_n = (k + 1) as f64;
            let v = x.data[sorted[k] * x.n_cols + f];
            let next = x.data[sorted[k + 1] * x.n_cols + f];
            if v == next || k + 1 < min_leaf || sorted.len() - k - 1 < min_leaf {
                continue;
            }
            let right_n = n - left_n;
            let impurity = (left_n * gini(left_pos, left_n) + right_n * gini(pos - left_pos, right_n)) / n;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, v + (next - v) / 2.0));
            }
        }
    }
    let Some((impurity, feature, threshold)) = best else {
        return me;
    };
    if impurity >= parent - 1e-12 {
        return me;
    }
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| x.data[i * x.n_cols + feature] <= threshold);
    let left = grow(x, y, cfg, left_idx, depth + 1, nodes);
    let right = grow(x, y, cfg, right_idx, depth + 1, nodes);
    nodes[me] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    me
}

fn fit_gaussian_nb(x: &Matrix, y: &[f64], cfg: &NaiveBayesConfig) -> Model {
    let mut counts = [0.0f64; 2];
    let mut mean = [vec![0.0; x.n_cols], vec![0.0; x.n_cols]];
    for i in 0..x.n_rows {
        let c = y[i] as usize;
        counts[c] += 1.0;
        for (m, v) in mean[c].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= counts[c]);
    }
    let mut var = [vec![0.0; x.n_cols], vec![0.0; x.n_cols]];
    for i in 0..x.n_rows {
        let c = y[i] as usize;
        for ((s, v), m) in var[c].iter_mut().zip(x.row(i)).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    // smoothing is relative to the largest overall feature variance
    let n = x.n_rows as f64;
    let mut max_var: f64 = 0.0;
    for k in 0..x.n_cols {
        let m = (0..x.n_rows).map(|i| x.row(i)[k]).sum::<f64>() / n;
        let v = (0..x.n_rows).map(|i| (x.row(i)[k] - m).powi(2)).sum::<f64>() / n;
        max_var = max_var.max(v);
    }
    let eps = cfg.var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };
    for c in 0..2 {
        var[c].iter_mut().for_each(|s| *s = *s / counts[c] + eps);
    }
    Model::GaussianNb {
        log_prior: [(counts[0] / n).ln(), (counts[1] / n).ln()],
        mean,
        var,
    }
}

/// Trains a classifier that scores the probability of `positive_label`.
pub fn train_classifier(
    kind: ClassifierKind,
    train: &Dataset,
    positive_label: &str,
    config: &ClassifierConfig,
) -> Result<Classifier> {
    let fail = |message: String| PrroError::Training {
        kind: kind.to_string(),
        message,
    };
    let y = binary_targets(train, positive_label)?;
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(fail(format!(
            "training set of {} rows has a single class; apply degenerate_positive_fix before training",
            y.len()
        )));
    }
    let binding = FeatureBinding::fit(train);
    let x = binding.encode(train)?;
    let model = match kind {
        ClassifierKind::LogisticRegression => fit_logistic(&x, &y, &config.logistic),
        ClassifierKind::DecisionTree => fit_tree(&x, &y, &config.tree),
        ClassifierKind::GaussianNb => fit_gaussian_nb(&x, &y, &config.naive_bayes),
    };
    Ok(Classifier {
        kind,
        binding,
        positive_label: positive_label.to_string(),
        model,
    })
}
