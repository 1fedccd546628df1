//! Positive-rate bookkeeping for imbalanced data: the single-positive fix
//! for synthetic sets without positives and the discount-rate comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::table::{label_code, positive_rate, Cell, Dataset};

/// If `synthetic` has no positive rows, relabels one uniformly chosen row
/// as positive. Otherwise (and for an empty set) returns it unchanged.
pub fn degenerate_positive_fix(synthetic: &Dataset, positive_label: &str, seed: u64) -> Result<Dataset> {
    let code = label_code(synthetic.schema(), positive_label)?;
    if synthetic.is_empty() || positive_rate(synthetic, positive_label)?.positives > 0 {
        return Ok(synthetic.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = rng.gen_range(0..synthetic.n_rows());
    let li = synthetic.schema().label_index();
    let mut rows = synthetic.rows().to_vec();
    rows[pick][li] = Cell::Cat(code as u32);
    synthetic.with_rows(rows)
}

/// Relative shrinkage of the positive rate, `(original - synthetic) / original`.
/// Negative when the synthetic rate overshoots.
pub fn discount_rate(original_rate: f64, synthetic_rate: f64) -> Result<f64> {
    if !(original_rate > 0.0) {
        return Err(PrroError::Metrics(format!(
            "discount rate needs a positive original rate, got {original_rate}"
        )));
    }
    Ok((original_rate - synthetic_rate) / original_rate)
}

/// Positive rates and discounts with and without pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountComparison {
    pub original_rate_without_pruning: f64,
    pub synthetic_rate_without_pruning: f64,
    pub original_rate_with_pruning: f64,
    pub synthetic_rate_with_pruning: f64,
    pub discount_without_pruning: f64,
    pub discount_with_pruning: f64,
    /// `|discount without| - |discount with|`, in the same units as the
    /// discounts. Positive when pruning brings the synthetic class balance
    /// closer to its source.
    pub similarity_improvement: f64,
}

impl DiscountComparison {
    pub fn new(
        original_without: f64,
        synthetic_without: f64,
        original_with: f64,
        synthetic_with: f64,
    ) -> Result<Self> {
        let before = discount_rate(original_without, synthetic_without)?;
        let after = discount_rate(original_with, synthetic_with)?;
        Ok(DiscountComparison {
            original_rate_without_pruning: original_without,
            synthetic_rate_without_pruning: synthetic_without,
            original_rate_with_pruning: original_with,
            synthetic_rate_with_pruning: synthetic_with,
            discount_without_pruning: before,
            discount_with_pruning: after,
            similarity_improvement: before.abs() - after.abs(),
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "arm,original_rate,synthetic_rate,discount\nwithout_pruning,{},{},{}\nwith_pruning,{},{},{}\n",
            self.original_rate_without_pruning,
            self.synthetic_rate_without_pruning,
            self.discount_without_pruning,
            self.original_rate_with_pruning,
            self.synthetic_rate_with_pruning,
            self.discount_with_pruning,
        )
    }
}
