#![allow(dead_code)]

use std::path::{Path, PathBuf};

use prro::pipeline::save_with_sidecar;
use prro::table::{Cell, ColumnSchema, Dataset, Schema};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn binary_label(name: &str) -> ColumnSchema {
    ColumnSchema::categorical(name, ["0", "1"]).as_label()
}

/// noise_1..noise_3 uniform on [0, 1), signal uniform on [0, 10), and
/// y = 1 exactly when signal exceeds its sample median.
pub fn rule_fixture(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let schema = Schema::new(vec![
        ColumnSchema::numeric("noise_1"),
        ColumnSchema::numeric("noise_2"),
        ColumnSchema::numeric("noise_3"),
        ColumnSchema::numeric("signal"),
        binary_label("y"),
    ])
    .unwrap();
    let raw: Vec<[f64; 4]> = (0..n)
        .map(|_| [r.gen(), r.gen(), r.gen(), r.gen_range(0.0..10.0)])
        .collect();
    let mut s: Vec<f64> = raw.iter().map(|x| x[3]).collect();
    s.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 };
    let rows = raw
        .iter()
        .map(|x| {
            let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
            row.push(Cell::Cat(u32::from(x[3] > median)));
            row
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Eight numeric features f1..f8, label y last. Positives (`rate` of rows)
/// follow an increasing profile, 80% of negatives a decreasing one and the
/// remaining negatives are uniform noise. Rows are shuffled.
pub fn imbalanced_fixture(n: usize, rate: f64, seed: u64) -> Dataset {
    let k = 8;
    let mut r = rng(seed);
    let mut cols: Vec<ColumnSchema> = (1..=k).map(|j| ColumnSchema::numeric(format!("f{j}"))).collect();
    cols.push(binary_label("y"));
    let schema = Schema::new(cols).unwrap();
    let n_pos = (n as f64 * rate).round() as usize;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i < n_pos;
        let kind = if positive { 0 } else if r.gen::<f64>() < 0.8 { 1 } else { 2 };
        let mut row: Vec<Cell> = (1..=k)
            .map(|j| {
                let v = match kind {
                    0 => j as f64 + r.gen_range(-1.5..1.5),
                    1 => (k + 1 - j) as f64 + r.gen_range(-1.5..1.5),
                    _ => r.gen_range(0.0..(k + 1) as f64),
                };
                Cell::Num(v)
            })
            .collect();
        row.push(Cell::Cat(u32::from(positive)));
        rows.push(row);
    }
    rows.shuffle(&mut r);
    Dataset::new(schema, rows).unwrap()
}

/// `n` rows of 18 numeric and 2 categorical features with a binary label
/// ("no"/"yes", about 10% "yes") placed at column 5.
pub fn wide_fixture(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut cols = Vec::new();
    for j in 0..20 {
        if j == 5 {
            cols.push(ColumnSchema::categorical("y", ["no", "yes"]).as_label());
        }
        if j == 7 || j == 13 {
            cols.push(ColumnSchema::categorical(format!("c{j}"), ["red", "green", "blue"]));
        } else {
            cols.push(ColumnSchema::numeric(format!("x{j}")));
        }
    }
    let schema = Schema::new(cols).unwrap();
    let rows = (0..n)
        .map(|_| {
            let feats: Vec<Cell> = (0..20)
                .map(|j| {
                    if j == 7 || j == 13 {
                        Cell::Cat(r.gen_range(0..3))
                    } else if r.gen::<f64>() < 0.01 {
                        Cell::Missing
                    } else {
                        Cell::Num((r.gen::<f64>() * 100.0).round() / 10.0)
                    }
                })
                .collect();
            let score = feats[0].as_num().unwrap_or(5.0) + feats[1].as_num().unwrap_or(5.0)
                - if feats[7] == Cell::Cat(0) { 3.0 } else { 0.0 };
            let p = 1.0 / (1.0 + (-(score - 14.5)).exp());
            let y = Cell::Cat(u32::from(r.gen::<f64>() < p));
            let mut row = feats;
            row.insert(5, y);
            row
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Letters plus the codec's separator and escape characters.
const ALPHABET: &[char] = &['a', 'b', 'c', 'x', 'Z', '0', '7', ',', ':', '\\', ' ', '\n', '\r', '-', 'é', '"'];

pub fn random_text<R: Rng>(r: &mut R, max_len: usize) -> String {
    let len = r.gen_range(1..=max_len);
    (0..len).map(|_| *ALPHABET.choose(r).unwrap()).collect()
}

fn unique_texts<R: Rng>(r: &mut R, count: usize, max_len: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(count);
    while out.len() < count {
        let t = random_text(r, max_len);
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

pub struct FuzzSpec {
    pub min_features: usize,
    pub max_features: usize,
    pub rows: std::ops::RangeInclusive<usize>,
    pub wild_names: bool,
    pub missing_rate: f64,
}

/// Random mixed-type table with a binary label ("0"/"1") at a random
/// position. Both classes appear when `rows` allows at least two rows.
pub fn fuzz_dataset<R: Rng>(r: &mut R, spec: &FuzzSpec) -> Dataset {
    let k = r.gen_range(spec.min_features..=spec.max_features);
    let names: Vec<String> = if spec.wild_names {
        unique_texts(r, k + 1, 5)
    } else {
        (0..=k).map(|j| format!("c{j}")).collect()
    };
    let label_at = r.gen_range(0..=k);
    let mut cols = Vec::with_capacity(k + 1);
    for (j, name) in names.iter().enumerate() {
        if j == label_at {
            cols.push(ColumnSchema::categorical(name.clone(), ["0", "1"]).as_label());
        } else if r.gen_bool(0.5) {
            cols.push(ColumnSchema::numeric(name.clone()));
        } else {
            let n_cat = r.gen_range(1..=4);
            let cats = if spec.wild_names {
                unique_texts(r, n_cat, 6)
            } else {
                (0..n_cat).map(|c| format!("v{c}")).collect()
            };
            cols.push(ColumnSchema::categorical(name.clone(), cats));
        }
    }
    let schema = Schema::new(cols).unwrap();
    let n = r.gen_range(spec.rows.clone());
    let rows = (0..n)
        .map(|i| {
            (0..schema.len())
                .map(|j| {
                    let col = schema.column(j);
                    if col.is_label() {
                        // rows 0 and 1 pin both classes
                        return Cell::Cat(match i {
                            0 => 1,
                            1 => 0,
                            _ => r.gen_range(0..2),
                        });
                    }
                    if r.gen::<f64>() < spec.missing_rate {
                        return Cell::Missing;
                    }
                    match col.kind {
                        prro::table::ColumnKind::Numeric => Cell::Num(random_number(r)),
                        prro::table::ColumnKind::Categorical => Cell::Cat(r.gen_range(0..col.categories.len() as u32)),
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

pub fn random_number<R: Rng>(r: &mut R) -> f64 {
    match r.gen_range(0..5) {
        0 => r.gen_range(-5..=5) as f64,
        1 => r.gen_range(-1e6..1e6),
        2 => r.gen::<f64>() * 1e-7,
        3 => {
            let v = f64::from_bits(r.gen());
            if v.is_finite() { v } else { 1.5 }
        }
        _ => (r.gen::<f64>() * 100.0).round() / 100.0,
    }
}

/// Saves `dataset` as `<dir>/<name>.csv` with a pinned sidecar.
pub fn write_table(dir: &Path, name: &str, dataset: &Dataset, positive: &str) -> PathBuf {
    let path = dir.join(format!("{name}.csv"));
    save_with_sidecar(dataset, &path, Some(positive)).unwrap();
    path
}
