//! Synthetic datasets: the exponential-output family and seeded random tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{Alpha, BoundsSpec, LowerSchedule};
use crate::data::{Attribute, Dataset, DatasetBuilder, Ranking, RankingSource, Schema};
use crate::error::{Error, Result};

/// A worst-case instance over `n` binary attributes.
///
/// Row `i < n` sets attribute `i` to 1 and every other attribute to 0; the
/// last row is all zeros. Rows are ranked in index order. At `k = n` with
/// `L = n/2 + 1` and `τ_s = 2`, the most-general violators are exactly the
/// patterns assigning 0 to `n/2` attributes, so the output has `C(n, n/2)`
/// members. The returned `Alpha` is `(n+3)/(n+4)`, for the proportional
/// variant of the same instance.
pub fn worst_case(n: usize) -> Result<(Dataset, Ranking, BoundsSpec, Alpha)> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Parameter(format!("worst-case size must be even and at least 2, got {n}")));
    }
    let binary = || vec!["0".to_string(), "1".to_string()];
    let schema = Schema::new((0..n).map(|i| Attribute::new(format!("A{}", i + 1), binary())).collect())?;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut row = vec![0u32; n];
        row[i] = 1;
        rows.push(row);
    }
    rows.push(vec![0u32; n]);
    let data = Dataset::new(schema, rows)?;
    let ranking = Ranking::from_order((0..=n).collect(), RankingSource::ExplicitRankColumn)?;
    let spec = BoundsSpec::global(2, n, n, LowerSchedule::flat(n as u64 / 2 + 1, n, n));
    let alpha = Alpha::new(n as u64 + 3, n as u64 + 4)?;
    Ok((data, ranking, spec, alpha))
}

/// Uniform i.i.d. categorical rows, fully determined by `seed`.
///
/// Attribute `j` is named `A{j}` and draws labels `v0..v{c-1}`; codes follow
/// first appearance, so categories that never occur are absent from the domain.
pub fn random_dataset(seed: u64, n_rows: usize, cardinalities: &[usize]) -> Result<Dataset> {
    if n_rows == 0 || cardinalities.is_empty() {
        return Err(Error::Parameter("random dataset needs at least one row and one attribute".into()));
    }
    if let Some(c) = cardinalities.iter().find(|&&c| c < 2) {
        return Err(Error::Parameter(format!("attribute cardinality must be at least 2, got {c}")));
    }
    let labels: Vec<Vec<String>> = cardinalities
        .iter()
        .map(|&c| (0..c).map(|v| format!("v{v}")).collect())
        .collect();
    let mut builder = DatasetBuilder::new((0..cardinalities.len()).map(|j| format!("A{j}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_rows {
        let row: Vec<&str> = labels
            .iter()
            .map(|l| l[rng.gen_range(0..l.len())].as_str())
            .collect();
        builder.push_row(row)?;
    }
    builder.finish()
}

/// A seeded uniformly random ranking of `n` rows.
pub fn random_ranking(seed: u64, n: usize) -> Ranking {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ranking::from_order(order, RankingSource::ScoreDerived).expect("a shuffle is a permutation")
}
