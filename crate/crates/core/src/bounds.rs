//! Representation bounds: a global lower-bound schedule or a proportionality factor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{BoundsError, Error, Result};

/// An exact positive rational `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alpha {
    num: u64,
    den: u64,
}

impl Alpha {
    pub fn new(num: u64, den: u64) -> Result<Self, BoundsError> {
        if den == 0 {
            return Err(BoundsError::MalformedAlpha(format!("{num}/{den}")));
        }
        if num == 0 {
            return Err(BoundsError::NonPositiveAlpha);
        }
        let g = gcd(num, den);
        Ok(Alpha {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl FromStr for Alpha {
    type Err = BoundsError;

    /// Accepts decimals (`0.9`, `1`, `.75`) and fractions (`9/10`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || BoundsError::MalformedAlpha(s.to_string());
        if s.starts_with('-') {
            return Err(BoundsError::NonPositiveAlpha);
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| malformed())?;
            let d: u64 = d.trim().parse().map_err(|_| malformed())?;
            return Alpha::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(malformed());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(malformed());
        }
        if frac.len() > 18 {
            return Err(malformed());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| malformed())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| malformed())? };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(malformed)?;
        Alpha::new(num, den)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Per-k lower bounds `L_k`, stored densely from `first_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerSchedule {
    first_k: usize,
    values: Vec<u64>,
}

impl LowerSchedule {
    /// Expands a step function given as `(from_k, L)` pairs. Each step holds
    /// until the next one starts; the last one holds through `k_max`.
    pub fn from_steps(steps: &[(usize, u64)], k_max: usize) -> Result<Self, BoundsError> {
        let mut steps = steps.to_vec();
        steps.sort_by_key(|&(k, _)| k);
        let Some(&(first_k, _)) = steps.first() else {
            return Err(BoundsError::ScheduleGap(1));
        };
        let first_k = first_k.max(1);
        let mut values = Vec::new();
        for k in first_k..=k_max.max(first_k) {
            let bound = steps
                .iter()
                .rev()
                .find(|&&(from, _)| from <= k)
                .map(|&(_, l)| l)
                .ok_or(BoundsError::ScheduleGap(k))?;
            values.push(bound);
        }
        Ok(LowerSchedule { first_k, values })
    }

    /// Uses the same bound for every k.
    pub fn flat(bound: u64, k_min: usize, k_max: usize) -> Self {
        LowerSchedule {
            first_k: k_min,
            values: vec![bound; k_max + 1 - k_min],
        }
    }

    /// Explicit per-k values starting at `first_k`.
    pub fn from_values(first_k: usize, values: Vec<u64>) -> Self {
        LowerSchedule { first_k, values }
    }

    pub fn get(&self, k: usize) -> Option<u64> {
        k.checked_sub(self.first_k)
            .and_then(|i| self.values.get(i))
            .copied()
    }

    /// `(k, L_k)` pairs where the bound changes, starting at the first defined k.
    pub fn steps(&self) -> Vec<(usize, u64)> {
        let mut out: Vec<(usize, u64)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if out.last().map_or(true, |&(_, last)| last != v) {
                out.push((self.first_k + i, v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Global(LowerSchedule),
    Proportional(Alpha),
}

/// Parameters of one audit: size threshold, k range, and the lower bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub size_threshold: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub mode: BoundMode,
}

impl BoundsSpec {
    pub fn global(size_threshold: u64, k_min: usize, k_max: usize, schedule: LowerSchedule) -> Self {
        BoundsSpec {
            size_threshold,
            k_min,
            k_max,
            mode: BoundMode::Global(schedule),
        }
    }

    pub fn proportional(size_threshold: u64, k_min: usize, k_max: usize, alpha: Alpha) -> Self {
        BoundsSpec {
            size_threshold,
            k_min,
            k_max,
            mode: BoundMode::Proportional(alpha),
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self.mode, BoundMode::Global(_))
    }

    pub fn alpha(&self) -> Option<Alpha> {
        match self.mode {
            BoundMode::Proportional(a) => Some(a),
            BoundMode::Global(_) => None,
        }
    }

    pub fn schedule(&self) -> Option<&LowerSchedule> {
        match &self.mode {
            BoundMode::Global(s) => Some(s),
            BoundMode::Proportional(_) => None,
        }
    }

    pub fn ks(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }

    /// `L_k` in global mode. Panics outside a validated range.
    pub(crate) fn lower(&self, k: usize) -> u64 {
        match &self.mode {
            BoundMode::Global(s) => s.get(k).expect("validated schedule covers k"),
            BoundMode::Proportional(_) => unreachable!("lower bound queried in proportional mode"),
        }
    }

    /// Lower-bound test for a pattern with `count` matches in the top-k and
    /// `size` matches in a dataset of `n` rows. Proportional bounds compare
    /// `count * n * den < num * size * k` exactly.
    pub fn violates(&self, count: u64, size: u64, k: usize, n: usize) -> bool {
        match &self.mode {
            BoundMode::Global(s) => s.get(k).is_some_and(|l| count < l),
            BoundMode::Proportional(a) => {
                (count as u128) * (n as u128) * (a.den as u128)
                    < (a.num as u128) * (size as u128) * (k as u128)
            }
        }
    }

    /// The bound value a pattern of `size` must reach at `k`, as a real number.
    pub fn required(&self, size: u64, k: usize, n: usize) -> f64 {
        match &self.mode {
            BoundMode::Global(s) => s.get(k).unwrap_or(0) as f64,
            BoundMode::Proportional(a) => a.to_f64() * size as f64 * k as f64 / n as f64,
        }
    }
}

/// Checks every structural rule of `spec` against `data`.
pub fn validate_bounds(spec: &BoundsSpec, data: &Dataset) -> Result<()> {
    let n = data.n_rows();
    if spec.size_threshold == 0 {
        return Err(BoundsError::ZeroThreshold.into());
    }
    if spec.k_min == 0 || spec.k_min > spec.k_max || spec.k_max > n {
        return Err(Error::Bounds(BoundsError::Range {
            k_min: spec.k_min,
            k_max: spec.k_max,
            n_rows: n,
        }));
    }
    match &spec.mode {
        BoundMode::Global(schedule) => {
            let mut previous: Option<u64> = None;
            for k in spec.ks() {
                let bound = schedule.get(k).ok_or(BoundsError::ScheduleGap(k))?;
                if let Some(prev) = previous {
                    if bound < prev {
                        return Err(BoundsError::NonMonotone {
                            k,
                            previous: prev,
                            current: bound,
                        }
                        .into());
                    }
                }
                if bound > k as u64 {
                    return Err(BoundsError::BoundExceedsK { k, bound }.into());
                }
                previous = Some(bound);
            }
        }
        BoundMode::Proportional(alpha) => {
            if alpha.num == 0 {
                return Err(BoundsError::NonPositiveAlpha.into());
            }
        }
    }
    Ok(())
}
