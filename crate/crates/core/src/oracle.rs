//! Brute-force ground truth over the full pattern lattice.
//!
//! Every pattern is a mixed-radix number with one digit per attribute: digit
//! 0 leaves the attribute unassigned, digit `c + 1` assigns code `c`. Removing
//! an assignment zeroes a digit and so always yields a smaller number, which
//! lets minimality be decided in a single ascending pass. Nothing here touches
//! the search tree or the count cache.

use std::collections::BTreeSet;

use crate::bounds::{validate_bounds, BoundMode, BoundsSpec};
use crate::data::{Dataset, Pattern, Ranking, Schema};
use crate::error::{Error, Result};
use crate::search::ResultSet;

/// Default bound on the number of lattice nodes the oracle will materialize.
pub const DEFAULT_CAP: u128 = 2_000_000;

/// Number of patterns over `schema`, the empty pattern included.
pub fn lattice_size(schema: &Schema) -> u128 {
    schema
        .domain_sizes()
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128 + 1))
}

struct Radix {
    strides: Vec<usize>,
    digits: Vec<usize>,
    total: usize,
}

impl Radix {
    fn new(schema: &Schema, cap: u128) -> Result<Self> {
        let total = lattice_size(schema);
        if total > cap {
            return Err(Error::TooLarge { patterns: total, cap });
        }
        let digits: Vec<usize> = schema.domain_sizes().iter().map(|d| d + 1).collect();
        let mut strides = Vec::with_capacity(digits.len());
        let mut s = 1usize;
        for d in &digits {
            strides.push(s);
            s *= d;
        }
        Ok(Radix {
            strides,
            digits,
            total: total as usize,
        })
    }

    fn decode(&self, mut index: usize) -> Pattern {
        let mut items = Vec::new();
        for (a, &d) in self.digits.iter().enumerate() {
            let digit = index % d;
            index /= d;
            if digit > 0 {
                items.push((a, digit as u32 - 1));
            }
        }
        Pattern::new(items).expect("one digit per attribute")
    }

    /// Indices of the `2^n` patterns `row` satisfies.
    fn satisfied_by(&self, row: &[u32], out: &mut Vec<usize>) {
        out.clear();
        out.push(0);
        for (a, &code) in row.iter().enumerate() {
            let step = (code as usize + 1) * self.strides[a];
            for i in 0..out.len() {
                out.push(out[i] + step);
            }
        }
    }
}

/// Every pattern over `schema` exactly once, the empty pattern first.
pub fn enumerate_all_patterns(schema: &Schema, cap: u128) -> Result<impl Iterator<Item = Pattern>> {
    let radix = Radix::new(schema, cap)?;
    Ok((0..radix.total).map(move |i| radix.decode(i)))
}

/// Most-general violators per k by exhaustive counting, with the default cap.
pub fn oracle_detect(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec) -> Result<ResultSet> {
    oracle_detect_with_cap(data, ranking, spec, DEFAULT_CAP)
}

pub fn oracle_detect_with_cap(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec, cap: u128) -> Result<ResultSet> {
    validate_bounds(spec, data)?;
    if ranking.len() != data.n_rows() {
        return Err(Error::MalformedRanking("ranking and dataset differ in length".into()));
    }
    let radix = Radix::new(data.schema(), cap)?;
    let n = data.n_rows();
    let mut size = vec![0u64; radix.total];
    let mut count = vec![0u64; radix.total];
    let mut hits = Vec::new();
    for row in data.rows() {
        radix.satisfied_by(row, &mut hits);
        for &i in &hits {
            size[i] += 1;
        }
    }

    let mut out = ResultSet::default();
    // bit 0: violates, bit 1: some proper subset violates
    let mut flags = vec![0u8; radix.total];
    for k in 1..=spec.k_max {
        radix.satisfied_by(data.row(ranking.at(k)), &mut hits);
        for &i in &hits {
            count[i] += 1;
        }
        if k < spec.k_min {
            continue;
        }
        let violates = |c: u64, s: u64| -> bool {
            match &spec.mode {
                BoundMode::Global(schedule) => c < schedule.get(k).expect("validated"),
                BoundMode::Proportional(alpha) => {
                    (c as u128) * (n as u128) * (alpha.denom() as u128)
                        < (alpha.numer() as u128) * (s as u128) * (k as u128)
                }
            }
        };
        let mut found = BTreeSet::new();
        flags[0] = 0;
        for i in 1..radix.total {
            let mut f = 0u8;
            if size[i] >= spec.size_threshold && violates(count[i], size[i]) {
                f |= 1;
            }
            let mut rest = i;
            for (a, &d) in radix.digits.iter().enumerate() {
                let digit = rest % d;
                rest /= d;
                if digit > 0 && flags[i - digit * radix.strides[a]] != 0 {
                    f |= 2;
                    break;
                }
            }
            flags[i] = f;
            if f == 1 {
                found.insert(radix.decode(i));
            }
        }
        out.per_k.insert(k, found);
        out.stats.insert(k, Default::default());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{Alpha, LowerSchedule};
    use crate::data::Attribute;
    use crate::fixtures::students;
    use crate::generators::worst_case;

    fn binary_schema(n: usize) -> Schema {
        Schema::new(
            (0..n)
                .map(|i| Attribute::new(format!("B{i}"), vec!["0".into(), "1".into()]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lattice_sizes() {
        let (data, _) = students();
        assert_eq!(enumerate_all_patterns(data.schema(), DEFAULT_CAP).unwrap().count(), 108);
        let one: Vec<Pattern> = enumerate_all_patterns(&binary_schema(1), DEFAULT_CAP).unwrap().collect();
        assert_eq!(one.len(), 3);
        assert!(one[0].is_empty());
        assert_eq!(enumerate_all_patterns(&binary_schema(4), DEFAULT_CAP).unwrap().count(), 81);
        let all: BTreeSet<Pattern> = enumerate_all_patterns(&binary_schema(4), DEFAULT_CAP).unwrap().collect();
        assert_eq!(all.len(), 81);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_all_patterns(&binary_schema(4), 80),
            Err(Error::TooLarge { patterns: 81, cap: 80 })
        ));
    }

    #[test]
    fn running_example_global_k4() {
        let (data, ranking) = students();
        let spec = BoundsSpec::global(4, 4, 4, LowerSchedule::flat(2, 4, 4));
        let res = oracle_detect(&data, &ranking, &spec).unwrap();
        let r4 = &res.per_k[&4];
        assert!(r4.contains(&data.pattern(&[("Address", "U")]).unwrap()));
        assert!(r4.contains(&data.pattern(&[("Failures", "1")]).unwrap()));
        assert!(!r4.contains(&data.pattern(&[("Gender", "F"), ("Address", "U")]).unwrap()));
    }

    #[test]
    fn threshold_above_dataset_size_reports_nothing() {
        let (data, ranking) = students();
        let spec = BoundsSpec::proportional(17, 1, 16, Alpha::new(1, 1).unwrap());
        let res = oracle_detect(&data, &ranking, &spec).unwrap();
        assert!(res.per_k.values().all(BTreeSet::is_empty));
    }

    #[test]
    fn worst_case_four_yields_six_two_zero_patterns() {
        let (data, ranking, spec, _) = worst_case(4).unwrap();
        let res = oracle_detect(&data, &ranking, &spec).unwrap();
        let r = &res.per_k[&4];
        assert_eq!(r.len(), 6);
        assert!(r.iter().all(|p| p.len() == 2 && p.iter().all(|(_, c)| c == 0)));
    }

    #[test]
    fn results_are_minimal() {
        let (data, ranking) = students();
        let spec = BoundsSpec::proportional(2, 1, 16, Alpha::new(9, 10).unwrap());
        let res = oracle_detect(&data, &ranking, &spec).unwrap();
        for (k, set) in &res.per_k {
            for p in set {
                for q in set {
                    assert!(!p.is_proper_subset_of(q), "k={k}");
                }
            }
        }
    }
}
