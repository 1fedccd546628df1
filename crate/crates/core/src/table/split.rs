use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{concat, Dataset};
use crate::error::{PrroError, Result};

/// Fractions for (generator-train, holdout, validation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub [f64; 3]);

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios([0.4, 0.4, 0.2]);

    pub fn new(train: f64, holdout: f64, validation: f64) -> Result<Self> {
        let r = SplitRatios([train, holdout, validation]);
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for &r in &self.0 {
            if !(r > 0.0 && r < 1.0) {
                return Err(PrroError::Split(format!("ratio {r} is outside (0, 1)")));
            }
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PrroError::Split(format!("ratios sum to {sum}, not 1")));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub generator_train: Dataset,
    pub holdout: Dataset,
    pub validation: Dataset,
    pub seed: u64,
    pub ratios: SplitRatios,
    /// Source row indices of each part, ascending.
    pub indices: [Vec<usize>; 3],
}

impl SplitBundle {
    /// Full training set D_T: generator-train rows followed by holdout rows.
    pub fn training(&self) -> Dataset {
        concat(&self.generator_train, &self.holdout).expect("parts share a schema")
    }
}

/// Floor of `ratio * n` per part; the remainder goes one row at a time to
/// train, then holdout, then validation.
pub fn part_sizes(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let mut sizes = ratios.0.map(|r| (r * n as f64 + 1e-9).floor() as usize);
    let mut total: usize = sizes.iter().sum();
    // float slack can overshoot by one on pathological ratios
    while total > n {
        let i = sizes.iter().rposition(|&s| s > 0).expect("non-empty");
        sizes[i] -= 1;
        total -= 1;
    }
    let mut part = 0;
    while total < n {
        sizes[part % 3] += 1;
        total += 1;
        part += 1;
    }
    sizes
}

/// Three-way split. Stratified splits allocate each label class separately
/// so every part's class counts are within one row of the exact share.
pub fn split(dataset: &Dataset, ratios: SplitRatios, seed: u64, stratified: bool) -> Result<SplitBundle> {
    ratios.validate()?;
    let n = dataset.n_rows();
    if n < 3 {
        return Err(PrroError::Split(format!("need at least 3 rows, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = part_sizes(n, &ratios);
    let mut parts: [Vec<usize>; 3] = Default::default();

    if stratified {
        let li = dataset.schema().label_index();
        let n_classes = dataset.schema().label().categories.len();
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (r, row) in dataset.rows().iter().enumerate() {
            classes[row[li].as_cat().expect("label present")].push(r);
        }
        for (c, members) in classes.iter().enumerate() {
            if !members.is_empty() && members.len() < 3 {
                return Err(PrroError::Split(format!(
                    "class '{}' has {} rows; stratification needs at least 3",
                    dataset.schema().label().categories[c],
                    members.len()
                )));
            }
        }
        let mut alloc: Vec<[usize; 3]> = classes
            .iter()
            .map(|m| ratios.0.map(|r| (r * m.len() as f64 + 1e-9).floor() as usize))
            .collect();
        let mut deficit = [0usize; 3];
        for p in 0..3 {
            let used: usize = alloc.iter().map(|a| a[p]).sum();
            deficit[p] = targets[p].saturating_sub(used);
        }
        // hand out each class's leftover rows to distinct parts, neediest part first
        for (c, members) in classes.iter().enumerate() {
            let mut leftover = members.len() - alloc[c].iter().sum::<usize>();
            let mut used = [false; 3];
            while leftover > 0 {
                let pick = (0..3)
                    .filter(|&p| !used[p] && deficit[p] > 0)
                    .max_by(|&a, &b| deficit[a].cmp(&deficit[b]).then(b.cmp(&a)))
                    .or_else(|| (0..3).filter(|&p| deficit[p] > 0).min())
                    .unwrap_or(0);
                used[pick] = true;
                alloc[c][pick] += 1;
                deficit[pick] = deficit[pick].saturating_sub(1);
                leftover -= 1;
            }
        }
        for (members, a) in classes.iter().zip(&alloc) {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            let mut start = 0;
            for p in 0..3 {
                parts[p].extend_from_slice(&shuffled[start..start + a[p]]);
                start += a[p];
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut start = 0;
        for p in 0..3 {
            parts[p].extend_from_slice(&order[start..start + targets[p]]);
            start += targets[p];
        }
    }
    for part in parts.iter_mut() {
        part.sort_unstable();
    }
    Ok(SplitBundle {
        generator_train: dataset.select(&parts[0]),
        holdout: dataset.select(&parts[1]),
        validation: dataset.select(&parts[2]),
        seed,
        ratios,
        indices: parts,
    })
}
