//! Spearman rank correlation between two observation vectors.
//!
//! Ranks are averaged over ties. Average ranks always sum to n(n+1)/2, so
//! centering by (n+1)/2 leaves half-integers and every sum below is exact
//! in `f64` for the vector lengths that occur in tables.

use std::cmp::Ordering;

use crate::error::{PrroError, Result};

/// Centered average ranks of one vector, ready for repeated correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankProfile {
    centered: Vec<f64>,
    sum_sq: f64,
}

impl RankProfile {
    pub fn new(values: &[f64]) -> Self {
        let ranks = average_ranks(values);
        let mid = (values.len() as f64 + 1.0) / 2.0;
        let centered: Vec<f64> = ranks.iter().map(|r| r - mid).collect();
        let sum_sq = centered.iter().map(|c| c * c).sum();
        RankProfile { centered, sum_sq }
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    /// `None` when either vector has zero rank variance.
    pub fn corr(&self, other: &RankProfile) -> Option<f64> {
        debug_assert_eq!(self.len(), other.len());
        if self.sum_sq == 0.0 || other.sum_sq == 0.0 {
            return None;
        }
        let cov: f64 = self
            .centered
            .iter()
            .zip(&other.centered)
            .map(|(a, b)| a * b)
            .sum();
        Some((cov / (self.sum_sq * other.sum_sq).sqrt()).clamp(-1.0, 1.0))
    }
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean((start+1)..=end)
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman coefficient of two equally long feature vectors. `Ok(None)`
/// signals an undefined coefficient (a constant vector).
pub fn spearman_rowcorr(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(PrroError::Pruning(format!(
            "vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(PrroError::Pruning(
            "Spearman correlation needs at least 2 feature columns".into(),
        ));
    }
    Ok(RankProfile::new(a).corr(&RankProfile::new(b)))
}
