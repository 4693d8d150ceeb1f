//! Interventional Shapley values with one player per attribute.
//!
//! `v(S)` is the mean surrogate prediction over background rows `b` after
//! overwriting the attributes in `S` with the values of the explained row.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::surrogate::SurrogateModel;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Largest attribute count exact enumeration accepts.
pub const EXACT_MAX_ATTRIBUTES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ShapleyMode {
    Exact,
    MonteCarlo { permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackgroundInfo {
    pub size: usize,
    pub sampled: bool,
    pub seed: u64,
}

/// Reference rows for the interventional value function.
#[derive(Debug, Clone)]
pub struct Background {
    rows: Vec<Vec<u32>>,
    info: BackgroundInfo,
}

impl Background {
    /// All rows when there are at most `max_rows`, else a seeded uniform sample
    /// of `max_rows` rows without replacement, kept in row order.
    pub fn from_dataset(data: &Dataset, max_rows: usize, seed: u64) -> Result<Self> {
        if max_rows == 0 {
            return Err(Error::EmptyBackground);
        }
        let n = data.n_rows();
        let (indices, sampled) = if n <= max_rows {
            ((0..n).collect::<Vec<_>>(), false)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, n, max_rows).into_vec();
            idx.sort_unstable();
            (idx, true)
        };
        Ok(Background {
            rows: indices.iter().map(|&i| data.row(i).to_vec()).collect(),
            info: BackgroundInfo {
                size: indices.len(),
                sampled,
                seed,
            },
        })
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyBackground);
        }
        let size = rows.len();
        Ok(Background {
            rows,
            info: BackgroundInfo {
                size,
                sampled: false,
                seed: 0,
            },
        })
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn info(&self) -> &BackgroundInfo {
        &self.info
    }

    /// Mean prediction over the background.
    pub fn mean_prediction(&self, model: &SurrogateModel) -> f64 {
        self.rows.iter().map(|b| model.predict(b)).sum::<f64>() / self.rows.len() as f64
    }
}

struct ValueFn<'a> {
    model: &'a SurrogateModel,
    t: &'a [u32],
    background: &'a Background,
    scratch: Vec<u32>,
}

impl ValueFn<'_> {
    fn value(&mut self, mask: u64) -> f64 {
        let mut total = 0.0;
        for b in &self.background.rows {
            for (a, slot) in self.scratch.iter_mut().enumerate() {
                *slot = if mask >> a & 1 == 1 { self.t[a] } else { b[a] };
            }
            total += self.model.predict(&self.scratch);
        }
        total / self.background.rows.len() as f64
    }
}

/// Shapley value of every attribute for row `t`. Monte Carlo runs draw from
/// stream 0 of the configured seed.
pub fn shapley_values(model: &SurrogateModel, t: &[u32], background: &Background, mode: ShapleyMode) -> Result<Vec<f64>> {
    shapley_values_on_stream(model, t, background, mode, 0)
}

/// As [`shapley_values`], drawing Monte Carlo permutations from `stream`, so
/// per-row results do not depend on evaluation order.
pub fn shapley_values_on_stream(
    model: &SurrogateModel,
    t: &[u32],
    background: &Background,
    mode: ShapleyMode,
    stream: u64,
) -> Result<Vec<f64>> {
    let m = t.len();
    if background.rows.is_empty() {
        return Err(Error::EmptyBackground);
    }
    if m > 63 {
        return Err(Error::ModeUnsupported { attributes: m, max: 63 });
    }
    let mut v = ValueFn {
        model,
        t,
        background,
        scratch: vec![0; m],
    };
    match mode {
        ShapleyMode::Exact => {
            if m > EXACT_MAX_ATTRIBUTES {
                return Err(Error::ModeUnsupported {
                    attributes: m,
                    max: EXACT_MAX_ATTRIBUTES,
                });
            }
            let values: Vec<f64> = (0..1u64 << m).map(|mask| v.value(mask)).collect();
            // weight(s) = s! (m - s - 1)! / m!
            let mut weight = vec![0.0; m];
            for (s, w) in weight.iter_mut().enumerate() {
                *w = 1.0 / (m as f64 * binomial(m - 1, s));
            }
            let mut phi = vec![0.0; m];
            for (i, p) in phi.iter_mut().enumerate() {
                let bit = 1u64 << i;
                for mask in 0..1u64 << m {
                    if mask & bit == 0 {
                        *p += weight[mask.count_ones() as usize] * (values[(mask | bit) as usize] - values[mask as usize]);
                    }
                }
            }
            Ok(phi)
        }
        ShapleyMode::MonteCarlo { permutations, seed } => {
            if permutations == 0 {
                return Err(Error::Parameter("Monte Carlo needs at least one permutation".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut memo: HashMap<u64, f64> = HashMap::new();
            let mut cached = |mask: u64, v: &mut ValueFn| *memo.entry(mask).or_insert_with(|| v.value(mask));
            let mut phi = vec![0.0; m];
            let mut order: Vec<usize> = (0..m).collect();
            for _ in 0..permutations {
                order.shuffle(&mut rng);
                let mut mask = 0u64;
                let mut prev = cached(mask, &mut v);
                for &i in &order {
                    mask |= 1 << i;
                    let cur = cached(mask, &mut v);
                    phi[i] += cur - prev;
                    prev = cur;
                }
            }
            for p in &mut phi {
                *p /= permutations as f64;
            }
            Ok(phi)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
