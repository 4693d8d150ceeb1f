//! Search-tree navigation over the pattern graph and memoized pattern counts.

use std::collections::HashMap;

use crate::data::{Dataset, Pattern, Ranking, Schema};
use crate::error::{Error, Result};

/// Children of `pattern` in the search tree: one extra assignment on an
/// attribute whose index exceeds every attribute already assigned. Ordered by
/// attribute index, then domain order.
pub fn generate_children(pattern: &Pattern, schema: &Schema) -> Vec<Pattern> {
    let start = pattern.max_attribute().map_or(0, |m| m + 1);
    let mut children = Vec::new();
    for (attr, a) in schema.attributes().iter().enumerate().skip(start) {
        for code in 0..a.domain_size() as u32 {
            children.push(pattern.extended(attr, code));
        }
    }
    children
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    /// `s_D(p)`.
    pub size_in_d: u64,
    /// Matches among the first `counted_up_to` ranked rows.
    pub topk_count: u64,
    /// Prefix length the `topk_count` refers to; 0 when never counted.
    pub counted_up_to: usize,
}

/// Per-pattern sizes and top-k counts for one search run.
#[derive(Debug, Default, Clone)]
pub struct CountCache {
    records: HashMap<Pattern, CountRecord>,
}

impl CountCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, pattern: &Pattern) -> Option<&CountRecord> {
        self.records.get(pattern)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn record(&mut self, pattern: &Pattern, data: &Dataset) -> &mut CountRecord {
        if !self.records.contains_key(pattern) {
            let size = data.rows().filter(|row| pattern.matches(row)).count() as u64;
            self.records.insert(
                pattern.clone(),
                CountRecord {
                    size_in_d: size,
                    topk_count: 0,
                    counted_up_to: 0,
                },
            );
        }
        self.records.get_mut(pattern).expect("inserted above")
    }

    /// `s_D(p)`, scanned once and memoized.
    pub fn pattern_size(&mut self, pattern: &Pattern, data: &Dataset) -> u64 {
        self.record(pattern, data).size_in_d
    }

    /// `s_{R^k(D)}(p)`. Moving forward from a cached prefix only tests the
    /// newly admitted rows; moving backward recounts the prefix.
    pub fn topk_count(&mut self, pattern: &Pattern, data: &Dataset, ranking: &Ranking, k: usize) -> u64 {
        let rec = self.record(pattern, data);
        if rec.counted_up_to > k {
            rec.topk_count = 0;
            rec.counted_up_to = 0;
        }
        for pos in rec.counted_up_to + 1..=k {
            if pattern.matches(data.row(ranking.at(pos))) {
                rec.topk_count += 1;
            }
        }
        rec.counted_up_to = k;
        rec.topk_count
    }

    /// Admits `R(D)[k]` into the counts of every tracked pattern, each of which
    /// must currently be counted up to `k - 1`. Returns the tracked patterns
    /// the new row satisfies, in input order.
    pub fn advance_k<'a>(
        &mut self,
        data: &Dataset,
        ranking: &Ranking,
        k: usize,
        tracked: impl IntoIterator<Item = &'a Pattern>,
    ) -> Result<Vec<Pattern>> {
        let tracked: Vec<&Pattern> = tracked.into_iter().collect();
        for p in &tracked {
            let up_to = self.records.get(*p).map_or(0, |r| r.counted_up_to);
            if up_to + 1 != k {
                return Err(Error::CacheCoherence {
                    pattern: p.to_string(),
                    counted_up_to: up_to,
                    expected: k - 1,
                });
            }
        }
        let row = data.row(ranking.at(k));
        let mut affected = Vec::new();
        for p in tracked {
            let rec = self.records.get_mut(p).expect("checked above");
            rec.counted_up_to = k;
            if p.matches(row) {
                rec.topk_count += 1;
                affected.push(p.clone());
            }
        }
        Ok(affected)
    }
}

/// Patterns produced by children expansion during one search, in generation order.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GeneratedNodeLog {
    nodes: Vec<Pattern>,
}

impl GeneratedNodeLog {
    pub fn push(&mut self, pattern: Pattern) {
        self.nodes.push(pattern);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pattern> {
        self.nodes.iter()
    }

    /// Whether every pattern was generated at most once.
    pub fn is_unique(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.nodes.len());
        self.nodes.iter().all(|p| seen.insert(p))
    }
}
