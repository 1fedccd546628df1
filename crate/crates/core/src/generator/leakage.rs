//! Holdout-based overfitting check on distance to closest record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::pruning::median;
use crate::table::{Cell, ColumnKind, Dataset, Row, Schema};

pub const DEFAULT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    /// Share of synthetic rows nearer to the training rows than to the
    /// holdout rows; ties count one half.
    pub frac_closer_to_train: f64,
    pub median_dcr_train: f64,
    pub median_dcr_holdout: f64,
    pub margin: f64,
    pub flag: bool,
    pub n_synthetic: usize,
}

impl LeakageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Gower distance: range-scaled absolute difference for numerics (capped
/// at 1), 0/1 mismatch for categoricals and missing markers, averaged
/// over columns.
#[derive(Debug, Clone)]
pub struct GowerSpace {
    kinds: Vec<ColumnKind>,
    ranges: Vec<f64>,
}

impl GowerSpace {
    /// Numeric ranges are taken over all of `references`.
    pub fn fit(schema: &Schema, references: &[&Dataset]) -> Self {
        let kinds: Vec<ColumnKind> = schema.columns().iter().map(|c| c.kind).collect();
        let ranges = (0..schema.len())
            .map(|j| {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for d in references {
                    for r in d.rows() {
                        if let Some(v) = r[j].as_num() {
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                if hi > lo { hi - lo } else { 0.0 }
            })
            .collect();
        GowerSpace { kinds, ranges }
    }

    pub fn distance(&self, a: &Row, b: &Row) -> f64 {
        if self.kinds.is_empty() {
            return 0.0;
        }
        let total: f64 = (0..self.kinds.len())
            .map(|j| match (&a[j], &b[j]) {
                (Cell::Missing, Cell::Missing) => 0.0,
                (Cell::Num(x), Cell::Num(y)) => {
                    if x == y {
                        0.0
                    } else if self.ranges[j] > 0.0 {
                        ((x - y).abs() / self.ranges[j]).min(1.0)
                    } else {
                        1.0
                    }
                }
                (Cell::Cat(x), Cell::Cat(y)) => f64::from(u8::from(x != y)),
                _ => 1.0,
            })
            .sum();
        total / self.kinds.len() as f64
    }

    pub fn closest(&self, row: &Row, reference: &Dataset) -> f64 {
        reference
            .rows()
            .iter()
            .map(|r| self.distance(row, r))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn leakage_check(synthetic: &Dataset, train: &Dataset, holdout: &Dataset, margin: f64) -> Result<LeakageReport> {
    for (name, d) in [("training", train), ("holdout", holdout)] {
        if d.schema() != synthetic.schema() {
            return Err(PrroError::SchemaMismatch(format!(
                "synthetic and {name} schemas differ"
            )));
        }
        if d.is_empty() {
            return Err(PrroError::Generator(format!("leakage check needs a non-empty {name} set")));
        }
    }
    if synthetic.is_empty() {
        return Err(PrroError::Generator("leakage check needs synthetic rows".into()));
    }
    if !(0.0..=0.5).contains(&margin) {
        return Err(PrroError::Config(format!("leakage margin must lie in [0, 0.5], got {margin}")));
    }
    let space = GowerSpace::fit(train.schema(), &[train, holdout]);
    let pairs: Vec<(f64, f64)> = synthetic
        .rows()
        .par_iter()
        .map(|r| (space.closest(r, train), space.closest(r, holdout)))
        .collect();
    let closer: f64 = pairs
        .iter()
        .map(|&(t, h)| if t < h { 1.0 } else if t == h { 0.5 } else { 0.0 })
        .sum();
    let frac = closer / pairs.len() as f64;
    let mut dt: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut dh: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(LeakageReport {
        frac_closer_to_train: frac,
        median_dcr_train: median(&mut dt).expect("non-empty"),
        median_dcr_holdout: median(&mut dh).expect("non-empty"),
        margin,
        flag: frac > 0.5 + margin,
        n_synthetic: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    fn ds(values: &[(f64, u32)]) -> Dataset {
        let s = Schema::new(vec![
            ColumnSchema::numeric("x"),
            ColumnSchema::categorical("y", ["0", "1"]).as_label(),
        ])
        .unwrap();
        Dataset::new(s, values.iter().map(|&(x, y)| vec![Cell::Num(x), Cell::Cat(y)]).collect()).unwrap()
    }

    #[test]
    fn copy_of_train_is_flagged() {
        let train = ds(&[(0.0, 0), (1.0, 1), (2.0, 0)]);
        let holdout = ds(&[(0.5, 1), (1.5, 0), (2.5, 1)]);
        let r = leakage_check(&train, &train, &holdout, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.frac_closer_to_train, 1.0);
        assert_eq!(r.median_dcr_train, 0.0);
        assert!(r.flag);
    }

    #[test]
    fn identical_references_tie_at_half() {
        let train = ds(&[(0.0, 0), (1.0, 1)]);
        let synth = ds(&[(0.3, 0), (7.0, 1), (1.0, 0)]);
        let r = leakage_check(&synth, &train, &train, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.frac_closer_to_train, 0.5);
        assert!(!r.flag);
    }

    #[test]
    fn gower_basics() {
        let d = ds(&[(0.0, 0), (4.0, 1)]);
        let g = GowerSpace::fit(d.schema(), &[&d]);
        let (a, b) = (&d.rows()[0], &d.rows()[1]);
        assert_eq!(g.distance(a, b), 1.0);
        assert_eq!(g.distance(a, a), 0.0);
        let c = vec![Cell::Num(1.0), Cell::Cat(0)];
        assert_eq!(g.distance(a, &c), 0.125);
        assert_eq!(g.distance(&c, a), 0.125);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = ds(&[(0.0, 0)]);
        let empty = ds(&[]);
        assert!(leakage_check(&d, &empty, &d, 0.1).is_err());
        assert!(leakage_check(&empty, &d, &d, 0.1).is_err());
        assert!(leakage_check(&d, &d, &d, 0.7).is_err());
    }
}
