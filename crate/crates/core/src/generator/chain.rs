//! First-order chain over discretized columns: column 1 from its marginal,
//! each later column from a smoothed table conditioned on its predecessor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PrroError, Result};
use crate::table::{Cell, ColumnKind, Dataset, Row, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub bins: usize,
    pub alpha: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { bins: 8, alpha: 1.0 }
    }
}

/// How one column maps to chain states. A missing marker, when the column
/// had any, is the last state.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    Categorical { categories: usize, missing: bool },
    /// Numeric column with at most `bins` distinct values; each is a state.
    Discrete { values: Vec<f64>, missing: bool },
    /// Quantile bins `[edges[i], edges[i+1])`, the last closed.
    Binned { edges: Vec<f64>, missing: bool },
}

impl StateSpace {
    pub fn n_states(&self) -> usize {
        let (base, missing) = match self {
            StateSpace::Categorical { categories, missing } => (*categories, *missing),
            StateSpace::Discrete { values, missing } => (values.len(), *missing),
            StateSpace::Binned { edges, missing } => (edges.len() - 1, *missing),
        };
        base + usize::from(missing)
    }

    /// Strictly increasing edges of a binned column.
    pub fn bin_edges(&self) -> Option<&[f64]> {
        match self {
            StateSpace::Binned { edges, .. } => Some(edges),
            _ => None,
        }
    }

    fn has_missing(&self) -> bool {
        match self {
            StateSpace::Categorical { missing, .. }
            | StateSpace::Discrete { missing, .. }
            | StateSpace::Binned { missing, .. } => *missing,
        }
    }

    fn state_of(&self, cell: &Cell) -> usize {
        let n = self.n_states();
        match (self, cell) {
            (_, Cell::Missing) => {
                debug_assert!(self.has_missing());
                n - 1
            }
            (StateSpace::Categorical { .. }, Cell::Cat(c)) => *c as usize,
            (StateSpace::Discrete { values, .. }, Cell::Num(v)) => {
                values.partition_point(|x| x < v).min(values.len() - 1)
            }
            (StateSpace::Binned { edges, .. }, Cell::Num(v)) => {
                let interior = &edges[1..edges.len() - 1];
                interior.partition_point(|e| e <= v)
            }
            _ => unreachable!("cell kind checked by the dataset"),
        }
    }

    fn decode<R: Rng>(&self, state: usize, rng: &mut R) -> Cell {
        if self.has_missing() && state == self.n_states() - 1 {
            return Cell::Missing;
        }
        match self {
            StateSpace::Categorical { .. } => Cell::Cat(state as u32),
            StateSpace::Discrete { values, .. } => Cell::Num(values[state]),
            StateSpace::Binned { edges, .. } => {
                let (lo, hi) = (edges[state], edges[state + 1]);
                let u: f64 = rng.gen();
                Cell::Num((lo + u * (hi - lo)).min(hi))
            }
        }
    }
}

/// Type-7 empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn state_space(dataset: &Dataset, j: usize, bins: usize) -> StateSpace {
    let col = dataset.schema().column(j);
    let missing = dataset.rows().iter().any(|r| r[j].is_missing());
    match col.kind {
        ColumnKind::Categorical => StateSpace::Categorical {
            categories: col.categories.len(),
            missing,
        },
        ColumnKind::Numeric => {
            let mut values: Vec<f64> = dataset.rows().iter().filter_map(|r| r[j].as_num()).collect();
            values.sort_by(f64::total_cmp);
            let mut distinct = values.clone();
            distinct.dedup();
            if distinct.len() <= bins {
                // also covers an all-missing column (no value states)
                return StateSpace::Discrete {
                    values: distinct,
                    missing,
                };
            }
            let mut edges: Vec<f64> = (0..=bins).map(|k| quantile(&values, k as f64 / bins as f64)).collect();
            edges.dedup();
            StateSpace::Binned { edges, missing }
        }
    }
}

fn smoothed(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + alpha * counts.len() as f64;
    counts.iter().map(|c| (c + alpha) / total).collect()
}

fn draw<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    schema: Schema,
    states: Vec<StateSpace>,
    marginal: Vec<f64>,
    /// `conditionals[j - 1][prev][cur]` for column `j >= 1`.
    conditionals: Vec<Vec<Vec<f64>>>,
    config: ChainConfig,
}

pub fn fit_chain(dataset: &Dataset, config: &ChainConfig) -> Result<ChainModel> {
    if dataset.is_empty() {
        return Err(PrroError::Generator("cannot fit a chain on an empty dataset".into()));
    }
    if config.bins < 2 {
        return Err(PrroError::Generator(format!("bins must be at least 2, got {}", config.bins)));
    }
    if !(config.alpha > 0.0) || !config.alpha.is_finite() {
        return Err(PrroError::Generator(format!("alpha must be positive, got {}", config.alpha)));
    }
    let k = dataset.schema().len();
    let states: Vec<StateSpace> = (0..k).map(|j| state_space(dataset, j, config.bins)).collect();
    let coded: Vec<Vec<usize>> = dataset
        .rows()
        .iter()
        .map(|r| r.iter().zip(&states).map(|(c, s)| s.state_of(c)).collect())
        .collect();

    let mut first = vec![0.0; states[0].n_states()];
    for r in &coded {
        first[r[0]] += 1.0;
    }
    let marginal = smoothed(&first, config.alpha);
    let conditionals = (1..k)
        .map(|j| {
            let mut counts = vec![vec![0.0; states[j].n_states()]; states[j - 1].n_states()];
            for r in &coded {
                counts[r[j - 1]][r[j]] += 1.0;
            }
            counts.iter().map(|row| smoothed(row, config.alpha)).collect()
        })
        .collect();
    Ok(ChainModel {
        schema: dataset.schema().clone(),
        states,
        marginal,
        conditionals,
        config: *config,
    })
}

impl ChainModel {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn column_order(&self) -> Vec<&str> {
        self.schema.names()
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn state_space(&self, column: usize) -> &StateSpace {
        &self.states[column]
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    /// `P(state of column | state of column - 1)`, rows indexed by the
    /// predecessor's state. `None` for column 0.
    pub fn conditional(&self, column: usize) -> Option<&[Vec<f64>]> {
        column.checked_sub(1).map(|j| self.conditionals[j].as_slice())
    }

    /// Probability of a full state vector (given in model column order).
    pub fn joint_probability(&self, states: &[usize]) -> f64 {
        let mut p = self.marginal[states[0]];
        for j in 1..states.len() {
            p *= self.conditionals[j - 1][states[j - 1]][states[j]];
        }
        p
    }

    /// Draws `n` rows. Row `r` uses `ChaCha8Rng::seed_from_u64(seed)` on
    /// stream `r`, so output does not depend on thread count.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(PrroError::Generator("sample size must be at least 1".into()));
        }
        let rows: Vec<Row> = (0..n)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                let mut row = Vec::with_capacity(self.states.len());
                let mut prev = draw(&self.marginal, &mut rng);
                row.push(self.states[0].decode(prev, &mut rng));
                for j in 1..self.states.len() {
                    let cur = draw(&self.conditionals[j - 1][prev], &mut rng);
                    row.push(self.states[j].decode(cur, &mut rng));
                    prev = cur;
                }
                row
            })
            .collect();
        Dataset::new(self.schema.clone(), rows)
    }
}

pub fn sample(model: &ChainModel, n: usize, seed: u64) -> Result<Dataset> {
    model.sample(n, seed)
}

/// L1 distance between the joint distributions implied by two chains fitted
/// on the same columns in possibly different orders.
pub fn implied_joint_l1(a: &ChainModel, b: &ChainModel) -> Result<f64> {
    let k = a.states.len();
    let mut to_b = Vec::with_capacity(k);
    for (j, name) in a.schema.names().iter().enumerate() {
        let jb = b
            .schema
            .index_of(name)
            .ok_or_else(|| PrroError::Generator(format!("column '{name}' missing from second model")))?;
        if a.states[j] != b.states[jb] {
            return Err(PrroError::Generator(format!("column '{name}' is discretized differently")));
        }
        to_b.push(jb);
    }
    if b.states.len() != k {
        return Err(PrroError::Generator("models cover different columns".into()));
    }
    let sizes: Vec<usize> = a.states.iter().map(StateSpace::n_states).collect();
    let cells = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
    if cells > 10_000_000 {
        return Err(PrroError::Generator(format!("joint has {cells} cells, too many to enumerate")));
    }
    let mut total = 0.0;
    let mut sa = vec![0usize; k];
    let mut sb = vec![0usize; k];
    for mut idx in 0..cells {
        for j in (0..k).rev() {
            sa[j] = idx % sizes[j];
            idx /= sizes[j];
        }
        for j in 0..k {
            sb[to_b[j]] = sa[j];
        }
        total += (a.joint_probability(&sa) - b.joint_probability(&sb)).abs();
    }
    Ok(total)
}
