use serde::{Deserialize, Serialize};

use super::classifier::{binary_targets, Predictor};
use crate::error::{PrroError, Result};
use crate::pruning::average_ranks;
use crate::table::Dataset;

/// Probabilities are clipped to `[EPS, 1 - EPS]` inside the log loss.
pub const PROBA_CLIP: f64 = 1e-12;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Validation metrics for one model. Undefined quantities are reported as 0
/// with their `*_defined` flag cleared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub precision_defined: bool,
    pub recall: f64,
    pub recall_defined: bool,
    pub f1: f64,
    pub f1_defined: bool,
    pub auc: f64,
    pub auc_defined: bool,
    /// Mean cross-entropy in nats.
    pub cross_entropy: f64,
    pub accuracy: f64,
    pub n_validation: usize,
    pub n_positive: usize,
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` unless both classes are present.
pub fn auc_mann_whitney(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

pub fn cross_entropy(scores: &[f64], positive: &[bool]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let total: f64 = scores
        .iter()
        .zip(positive)
        .map(|(&p, &y)| {
            // probability assigned to the observed class
            let q = if y { p } else { 1.0 - p };
            -q.clamp(PROBA_CLIP, 1.0 - PROBA_CLIP).ln()
        })
        .sum();
    total / scores.len() as f64
}

pub fn metrics_from_scores(scores: &[f64], positive: &[bool], threshold: f64) -> Result<MetricReport> {
    if scores.len() != positive.len() {
        return Err(PrroError::Metrics(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.is_empty() {
        return Err(PrroError::Metrics("validation set is empty".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(positive) {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { (0.0, false) } else { (num as f64 / den as f64, true) };
    let (precision, precision_defined) = ratio(tp, tp + fp);
    let (recall, recall_defined) = ratio(tp, tp + fn_);
    let (f1, f1_defined) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), true)
    } else {
        (0.0, false)
    };
    let auc = auc_mann_whitney(scores, positive);
    Ok(MetricReport {
        precision,
        precision_defined,
        recall,
        recall_defined,
        f1,
        f1_defined,
        auc: auc.unwrap_or(0.0),
        auc_defined: auc.is_some(),
        cross_entropy: cross_entropy(scores, positive),
        accuracy: (tp + tn) as f64 / scores.len() as f64,
        n_validation: scores.len(),
        n_positive: tp + fn_,
    })
}

pub fn metrics<P: Predictor + ?Sized>(classifier: &P, validation: &Dataset, threshold: f64) -> Result<MetricReport> {
    let scores = classifier.predict_proba(validation)?;
    let positive: Vec<bool> = binary_targets(validation, classifier.positive_label())?
        .into_iter()
        .map(|y| y == 1.0)
        .collect();
    metrics_from_scores(&scores, &positive, threshold)
}
