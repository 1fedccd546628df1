//! Undersampling baselines: random undersampling and cluster centroids.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmax_first, median};
use crate::error::{PrroError, Result};
use crate::table::{Cell, ColumnKind, Dataset};

struct Classes {
    minority: Vec<usize>,
    majority: Vec<usize>,
    majority_code: u32,
}

fn two_classes(dataset: &Dataset) -> Result<Classes> {
    let li = dataset.schema().label_index();
    let n_cats = dataset.schema().label().categories.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_cats];
    for (r, row) in dataset.rows().iter().enumerate() {
        members[row[li].as_cat().expect("label present")].push(r);
    }
    let present: Vec<usize> = (0..n_cats).filter(|&c| !members[c].is_empty()).collect();
    if present.len() != 2 {
        return Err(PrroError::Undersample(format!(
            "expected exactly two label classes, found {}",
            present.len()
        )));
    }
    let (a, b) = (present[0], present[1]);
    // the larger class is the majority; on equal counts the first class is
    let (maj, min) = if members[b].len() > members[a].len() {
        (b, a)
    } else {
        (a, b)
    };
    Ok(Classes {
        majority_code: maj as u32,
        majority: std::mem::take(&mut members[maj]),
        minority: std::mem::take(&mut members[min]),
    })
}

/// Keeps every minority row and samples majority rows without replacement so
/// the majority makes up `target_majority_ratio` of the result (rounded
/// down). Rows keep their source order.
pub fn random_undersample(dataset: &Dataset, target_majority_ratio: f64, seed: u64) -> Result<Dataset> {
    if !(target_majority_ratio > 0.0 && target_majority_ratio < 1.0) {
        return Err(PrroError::Undersample(format!(
            "target majority ratio {target_majority_ratio} must lie in (0, 1)"
        )));
    }
    let classes = two_classes(dataset)?;
    let n_min = classes.minority.len() as f64;
    let wanted = (target_majority_ratio * n_min / (1.0 - target_majority_ratio) + 1e-9).floor() as usize;
    if wanted > classes.majority.len() {
        return Err(PrroError::Undersample(format!(
            "ratio {target_majority_ratio} needs {wanted} majority rows, only {} exist",
            classes.majority.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, classes.majority.len(), wanted)
        .into_iter()
        .map(|i| classes.majority[i])
        .collect();
    keep.extend_from_slice(&classes.minority);
    keep.sort_unstable();
    Ok(dataset.select(&keep))
}

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until assignments settle.
/// Empty clusters keep their previous center.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> KMeans {
    assert!(k >= 1 && k <= points.len(), "1 <= k <= points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if target < d {
                        pick = Some(i);
                        break;
                    }
                    target -= d;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive mass"))
        } else {
            // every point coincides with a center; take the first unused index
            (0..points.len()).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    let mut centers: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut objective = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            total += d;
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        objective.push(total);
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    KMeans {
        centers,
        assignment,
        objective,
    }
}

/// Replaces the majority class with `k` centroid rows: per-cluster means for
/// numeric columns and modal categories for categorical ones. Distances use
/// z-scored numerics and one-hot categoricals. Minority rows come first in
/// source order, then the centroids.
pub fn cluster_centroids(dataset: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(PrroError::Undersample("k must be positive".into()));
    }
    let classes = two_classes(dataset)?;
    let majority = &classes.majority;
    if k > majority.len() {
        return Err(PrroError::Undersample(format!(
            "k = {k} exceeds the {} majority rows",
            majority.len()
        )));
    }
    let schema = dataset.schema();
    let features = schema.feature_indices();
    let rows = dataset.rows();

    let mut points: Vec<Vec<f64>> = vec![Vec::new(); majority.len()];
    for &j in &features {
        let col = schema.column(j);
        match col.kind {
            ColumnKind::Numeric => {
                let mut present: Vec<f64> = majority.iter().filter_map(|&r| rows[r][j].as_num()).collect();
                let n = present.len().max(1) as f64;
                let mean = present.iter().sum::<f64>() / n;
                let var = present.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                let fill = median(&mut present).unwrap_or(mean);
                for (p, &r) in points.iter_mut().zip(majority) {
                    let v = rows[r][j].as_num().unwrap_or(fill);
                    p.push((v - mean) / sd);
                }
            }
            ColumnKind::Categorical => {
                for (p, &r) in points.iter_mut().zip(majority) {
                    let cat = rows[r][j].as_cat();
                    p.extend((0..col.categories.len()).map(|c| f64::from(u8::from(cat == Some(c)))));
                }
            }
        }
    }

    let km = kmeans(&points, k, seed, 300);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in km.assignment.iter().enumerate() {
        members[c].push(i);
    }

    let mut out: Vec<Vec<Cell>> = classes.minority.iter().map(|&r| rows[r].clone()).collect();
    for (c, cluster) in members.iter().enumerate() {
        if cluster.is_empty() {
            // stand in the majority row nearest the stranded center
            let (i, _) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, sq_dist(p, &km.centers[c])))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            out.push(rows[majority[i]].clone());
            continue;
        }
        let mut row = vec![Cell::Missing; schema.len()];
        row[schema.label_index()] = Cell::Cat(classes.majority_code);
        for &j in &features {
            let col = schema.column(j);
            row[j] = match col.kind {
                ColumnKind::Numeric => {
                    let values: Vec<f64> = cluster.iter().filter_map(|&i| rows[majority[i]][j].as_num()).collect();
                    match values.first() {
                        // mean relative to the first value keeps identical members exact
                        Some(&v0) => Cell::Num(v0 + values.iter().map(|v| v - v0).sum::<f64>() / values.len() as f64),
                        None => Cell::Missing,
                    }
                }
                ColumnKind::Categorical => {
                    let mut counts = vec![0usize; col.categories.len()];
                    for &i in cluster {
                        if let Some(cat) = rows[majority[i]][j].as_cat() {
                            counts[cat] += 1;
                        }
                    }
                    if counts.iter().all(|&n| n == 0) {
                        Cell::Missing
                    } else {
                        Cell::Cat(argmax_first(&counts).expect("non-empty") as u32)
                    }
                }
            };
        }
        out.push(row);
    }
    dataset.with_rows(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{positive_rate, ColumnSchema, Schema};

    fn schema2() -> Schema {
        Schema::new(vec![
            ColumnSchema::numeric("a"),
            ColumnSchema::numeric("b"),
            ColumnSchema::categorical("y", ["0", "1"]).as_label(),
        ])
        .unwrap()
    }

    fn row(a: f64, b: f64, y: u32) -> Vec<Cell> {
        vec![Cell::Num(a), Cell::Num(b), Cell::Cat(y)]
    }

    fn imbalanced(maj: usize, min: usize) -> Dataset {
        let mut rows: Vec<_> = (0..maj).map(|i| row(i as f64, 0.0, 0)).collect();
        rows.extend((0..min).map(|i| row(i as f64, 1.0, 1)));
        Dataset::new(schema2(), rows).unwrap()
    }

    #[test]
    fn rus_hits_target_ratio() {
        let d = imbalanced(98, 2);
        let out = random_undersample(&d, 0.5, 1).unwrap();
        assert_eq!(out.n_rows(), 4);
        assert_eq!(positive_rate(&out, "1").unwrap().positives, 2);
    }

    #[test]
    fn rus_at_current_ratio_is_identity() {
        let d = imbalanced(98, 2);
        assert_eq!(random_undersample(&d, 0.98, 5).unwrap(), d);
    }

    #[test]
    fn rus_is_deterministic_and_checks_feasibility() {
        let d = imbalanced(98, 2);
        assert_eq!(random_undersample(&d, 0.8, 9).unwrap(), random_undersample(&d, 0.8, 9).unwrap());
        assert!(random_undersample(&d, 0.99, 9).is_err());
        assert!(random_undersample(&d, 1.0, 9).is_err());
    }

    #[test]
    fn cc_degenerate_cluster_is_the_row() {
        let mut rows = vec![row(3.3, -1.7, 0); 4];
        rows.push(row(0.0, 0.0, 1));
        let d = Dataset::new(schema2(), rows).unwrap();
        let out = cluster_centroids(&d, 1, 0).unwrap();
        assert_eq!(out.rows(), &[row(0.0, 0.0, 1), row(3.3, -1.7, 0)]);
    }

    #[test]
    fn cc_separable_blobs() {
        let rows = vec![
            row(0.0, 0.0, 0),
            row(0.0, 2.0, 0),
            row(10.0, 10.0, 0),
            row(10.0, 12.0, 0),
            row(5.0, 5.0, 1),
        ];
        let d = Dataset::new(schema2(), rows).unwrap();
        for seed in 0..10 {
            let out = cluster_centroids(&d, 2, seed).unwrap();
            let mut centroids: Vec<(f64, f64)> = out.rows()[1..]
                .iter()
                .map(|r| (r[0].as_num().unwrap(), r[1].as_num().unwrap()))
                .collect();
            centroids.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(centroids, [(0.0, 1.0), (10.0, 11.0)], "seed {seed}");
        }
    }

    #[test]
    fn cc_k_equal_majority_is_permutation() {
        let d = imbalanced(7, 2);
        let out = cluster_centroids(&d, 7, 3).unwrap();
        let mut got: Vec<_> = out.rows()[2..].to_vec();
        let mut want: Vec<_> = d.rows()[..7].to_vec();
        let key = |r: &Vec<Cell>| r[0].as_num().unwrap();
        got.sort_by(|a, b| key(a).total_cmp(&key(b)));
        want.sort_by(|a, b| key(a).total_cmp(&key(b)));
        assert_eq!(got, want);
    }

    #[test]
    fn cc_errors() {
        let d = imbalanced(3, 1);
        assert!(cluster_centroids(&d, 0, 0).is_err());
        assert!(cluster_centroids(&d, 4, 0).is_err());
        let one_class = imbalanced(3, 0);
        assert!(cluster_centroids(&one_class, 1, 0).is_err());
    }

    #[test]
    fn kmeans_objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let points: Vec<Vec<f64>> = (0..60)
                .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let km = kmeans(&points, 1 + trial % 6, trial as u64, 100);
            for w in km.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", km.objective);
            }
        }
    }
}
