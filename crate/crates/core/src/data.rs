//! Datasets of categorical codes, rankings over their rows, and patterns.
//!
//! Every attribute value is stored as a dense `u32` code indexing into the
//! attribute's domain. Labels are kept only for reporting.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A categorical attribute and its active domain, in code order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub domain: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, domain: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            domain,
        }
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn code_of(&self, label: &str) -> Option<u32> {
        self.domain.iter().position(|l| l == label).map(|c| c as u32)
    }
}

/// Ordered attribute list. The position of an attribute is its index in
/// patterns and in the search tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::DuplicateAttribute(attr.name.clone()));
            }
            if attr.domain.is_empty() {
                return Err(Error::EmptyDomain(attr.name.clone()));
            }
            let mut labels = HashSet::new();
            for label in &attr.domain {
                if !labels.insert(label.as_str()) {
                    return Err(Error::DuplicateLabel {
                        attribute: attr.name.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, index: usize) -> Option<&Attribute> {
        self.attributes.get(index)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.attributes.iter().map(Attribute::domain_size).collect()
    }

    /// Checks that every assignment of `pattern` addresses an attribute and a
    /// category of this schema.
    pub fn check_pattern(&self, pattern: &Pattern) -> Result<()> {
        for (attr, code) in pattern.iter() {
            let a = self.attributes.get(attr).ok_or(Error::SchemaMismatch {
                attribute: attr,
                n_attributes: self.len(),
            })?;
            if code as usize >= a.domain.len() {
                return Err(Error::InvalidCode {
                    attribute: a.name.clone(),
                    code,
                    domain_size: a.domain.len(),
                });
            }
        }
        Ok(())
    }
}

/// An immutable table of category codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    width: usize,
    cells: Vec<u32>,
}

impl Dataset {
    /// Builds a dataset from pre-coded rows.
    ///
    /// Domains must be active: every declared category has to occur in at
    /// least one row.
    pub fn new(schema: Schema, rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let width = schema.len();
        let mut seen: Vec<Vec<bool>> = schema
            .attributes()
            .iter()
            .map(|a| vec![false; a.domain.len()])
            .collect();
        let mut cells = Vec::with_capacity(rows.len() * width);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::RowArity {
                    row: r,
                    found: row.len(),
                    expected: width,
                });
            }
            for (a, &code) in row.iter().enumerate() {
                let attr = &schema.attributes()[a];
                if code as usize >= attr.domain.len() {
                    return Err(Error::InvalidCode {
                        attribute: attr.name.clone(),
                        code,
                        domain_size: attr.domain.len(),
                    });
                }
                seen[a][code as usize] = true;
            }
            cells.extend(row);
        }
        for (attr, seen) in schema.attributes().iter().zip(&seen) {
            if let Some(c) = seen.iter().position(|s| !s) {
                return Err(Error::InactiveCategory {
                    attribute: attr.name.clone(),
                    label: attr.domain[c].clone(),
                });
            }
        }
        Ok(Dataset {
            schema,
            width,
            cells,
        })
    }

    /// Builds a dataset from label rows, assigning codes in first-appearance
    /// order per attribute.
    pub fn from_labels<S: AsRef<str>>(names: &[S], rows: &[Vec<S>]) -> Result<Self> {
        let mut builder = DatasetBuilder::new(names.iter().map(|n| n.as_ref().to_string()))?;
        for row in rows {
            builder.push_row(row.iter().map(|v| v.as_ref()))?;
        }
        builder.finish()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len() / self.width.max(1)
    }

    pub fn n_attributes(&self) -> usize {
        self.width
    }

    /// Codes of row `index` (0-based).
    pub fn row(&self, index: usize) -> &[u32] {
        &self.cells[index * self.width..(index + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.cells.chunks(self.width.max(1))
    }

    /// Whether row `index` matches every assignment of `pattern`.
    pub fn satisfies(&self, index: usize, pattern: &Pattern) -> Result<bool> {
        if let Some(attr) = pattern.max_attribute() {
            if attr >= self.width {
                return Err(Error::SchemaMismatch {
                    attribute: attr,
                    n_attributes: self.width,
                });
            }
        }
        Ok(pattern.matches(self.row(index)))
    }

    /// Parses `(attribute name, label)` pairs into a pattern.
    pub fn pattern<A: AsRef<str>, L: AsRef<str>>(&self, pairs: &[(A, L)]) -> Result<Pattern> {
        let mut assignments = Vec::with_capacity(pairs.len());
        for (name, label) in pairs {
            let (name, label) = (name.as_ref(), label.as_ref());
            let index = self
                .schema
                .index_of(name)
                .ok_or_else(|| Error::UnknownAttribute(name.to_string()))?;
            let code = self.schema.attributes()[index]
                .code_of(label)
                .ok_or_else(|| Error::UnknownLabel {
                    attribute: name.to_string(),
                    label: label.to_string(),
                })?;
            assignments.push((index, code));
        }
        Pattern::new(assignments)
    }

    /// Human-readable form, e.g. `{School=GP, Address=U}`.
    pub fn describe(&self, pattern: &Pattern) -> String {
        let parts: Vec<String> = pattern
            .iter()
            .map(|(a, c)| match self.schema.attribute(a) {
                Some(attr) => format!(
                    "{}={}",
                    attr.name,
                    attr.domain.get(c as usize).map(String::as_str).unwrap_or("?")
                ),
                None => format!("#{a}={c}"),
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Incremental label-to-code ingestion.
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    names: Vec<String>,
    domains: Vec<Vec<String>>,
    lookup: Vec<HashMap<String, u32>>,
    rows: Vec<Vec<u32>>,
}

impl DatasetBuilder {
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().collect();
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateAttribute(n.clone()));
            }
        }
        let width = names.len();
        Ok(DatasetBuilder {
            names,
            domains: vec![Vec::new(); width],
            lookup: vec![HashMap::new(); width],
            rows: Vec::new(),
        })
    }

    /// Appends a row of labels; unseen labels receive the next free code.
    pub fn push_row<'a>(&mut self, labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let mut row = Vec::with_capacity(self.names.len());
        for (a, label) in labels.into_iter().enumerate() {
            if a >= self.names.len() {
                row.push(0);
                continue;
            }
            let next = self.domains[a].len() as u32;
            let code = *self.lookup[a].entry(label.to_string()).or_insert_with(|| {
                self.domains[a].push(label.to_string());
                next
            });
            row.push(code);
        }
        if row.len() != self.names.len() {
            return Err(Error::RowArity {
                row: self.rows.len(),
                found: row.len(),
                expected: self.names.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn finish(self) -> Result<Dataset> {
        let attributes = self
            .names
            .into_iter()
            .zip(self.domains)
            .map(|(n, d)| Attribute::new(n, d))
            .collect();
        Dataset::new(Schema::new(attributes)?, self.rows)
    }
}

/// A conjunction of attribute assignments, kept sorted by attribute index.
///
/// The derived ordering compares the sorted assignment lists
/// lexicographically. It coincides with the byte order of
/// [`Pattern::canonical_key`], places every pattern before its search-tree
/// descendants, and keeps all extensions of a pattern contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Pattern {
    items: Vec<(u32, u32)>,
}

impl Pattern {
    pub fn empty() -> Self {
        Pattern { items: Vec::new() }
    }

    /// Builds a pattern from `(attribute index, code)` pairs in any order.
    pub fn new(assignments: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut items: Vec<(u32, u32)> = assignments
            .into_iter()
            .map(|(a, c)| (a as u32, c))
            .collect();
        items.sort_unstable();
        for w in items.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::RepeatedAssignment(w[0].0 as usize));
            }
        }
        Ok(Pattern { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.items.iter().map(|&(a, c)| (a as usize, c))
    }

    pub fn get(&self, attribute: usize) -> Option<u32> {
        self.items
            .binary_search_by_key(&(attribute as u32), |&(a, _)| a)
            .ok()
            .map(|i| self.items[i].1)
    }

    /// Largest assigned attribute index (`idx(Attr(p))`), `None` for the empty pattern.
    pub fn max_attribute(&self) -> Option<usize> {
        self.items.last().map(|&(a, _)| a as usize)
    }

    /// The pattern extended by one assignment on an attribute past `max_attribute`.
    pub(crate) fn extended(&self, attribute: usize, code: u32) -> Pattern {
        debug_assert!(self.max_attribute().map_or(true, |m| m < attribute));
        let mut items = Vec::with_capacity(self.items.len() + 1);
        items.extend_from_slice(&self.items);
        items.push((attribute as u32, code));
        Pattern { items }
    }

    /// Whether `row` carries every assigned code. The row must be at least as
    /// wide as the largest assigned attribute.
    pub fn matches(&self, row: &[u32]) -> bool {
        self.items.iter().all(|&(a, c)| row[a as usize] == c)
    }

    /// Every assignment of `self` appears in `other` (`self ⊆ other`).
    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        if self.items.len() > other.items.len() {
            return false;
        }
        let mut it = other.items.iter();
        'outer: for x in &self.items {
            for y in it.by_ref() {
                if y == x {
                    continue 'outer;
                }
                if y.0 > x.0 {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_proper_subset_of(&self, other: &Pattern) -> bool {
        self.items.len() < other.items.len() && self.is_subset_of(other)
    }

    /// Whether `prefix` is a search-tree ancestor of (or equal to) `self`.
    pub fn has_prefix(&self, prefix: &Pattern) -> bool {
        self.items.starts_with(&prefix.items)
    }

    /// Proper search-tree ancestors, shortest first, excluding the empty pattern.
    pub(crate) fn proper_prefixes(&self) -> impl Iterator<Item = Pattern> + '_ {
        (1..self.items.len()).map(move |n| Pattern {
            items: self.items[..n].to_vec(),
        })
    }

    /// Fixed-width big-endian encoding of the sorted assignment list. Byte
    /// order of keys matches the `Ord` of patterns.
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut key = Vec::with_capacity(self.items.len() * 8);
        for &(a, c) in &self.items {
            key.extend_from_slice(&a.to_be_bytes());
            key.extend_from_slice(&c.to_be_bytes());
        }
        key
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, c)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "#{a}={c}")?;
        }
        f.write_str("}")
    }
}

/// `ancestor ⊆ descendant` on assignments; reflexive.
pub fn contains(ancestor: &Pattern, descendant: &Pattern) -> bool {
    ancestor.is_subset_of(descendant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankingSource {
    ExplicitRankColumn,
    ScoreDerived,
}

/// Sort direction of one score component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

/// A total order over the rows of a dataset. Position 1 is the best row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<usize>,
    source: RankingSource,
}

impl Ranking {
    /// Wraps a permutation of `0..n` listing rows best-first.
    pub fn from_order(order: Vec<usize>, source: RankingSource) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &r in &order {
            if r >= order.len() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::MalformedRanking(format!(
                    "row {r} is out of range or listed twice"
                )));
            }
        }
        Ok(Ranking { order, source })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn source(&self) -> RankingSource {
        self.source
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Row at 1-indexed position `k` (`R(D)[k]`).
    pub fn at(&self, k: usize) -> usize {
        self.order[k - 1]
    }

    /// The first `k` rows (`R^k(D)`).
    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.order[..k]
    }

    /// 1-indexed position of every row, indexed by row.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &r) in self.order.iter().enumerate() {
            pos[r] = i + 1;
        }
        pos
    }
}

/// Orders rows ascending by their rank value, which must be a permutation of `1..=n`.
pub fn ranking_from_rank_column(data: &Dataset, ranks: &[u64]) -> Result<Ranking> {
    let n = data.n_rows();
    if ranks.len() != n {
        return Err(Error::MalformedRanking(format!(
            "{} ranks for {n} rows",
            ranks.len()
        )));
    }
    let mut order = vec![usize::MAX; n];
    for (row, &rank) in ranks.iter().enumerate() {
        if rank == 0 || rank as usize > n {
            return Err(Error::MalformedRanking(format!(
                "rank {rank} of row {row} is outside 1..={n}"
            )));
        }
        let slot = &mut order[rank as usize - 1];
        if *slot != usize::MAX {
            return Err(Error::MalformedRanking(format!("rank {rank} appears twice")));
        }
        *slot = row;
    }
    Ok(Ranking {
        order,
        source: RankingSource::ExplicitRankColumn,
    })
}

/// Orders rows lexicographically by direction-adjusted score vectors; ties
/// keep ascending row order.
pub fn ranking_from_scores(
    data: &Dataset,
    scores: &[Vec<f64>],
    directions: &[Direction],
) -> Result<Ranking> {
    if scores.len() != data.n_rows() {
        return Err(Error::MalformedRanking(format!(
            "{} score rows for {} data rows",
            scores.len(),
            data.n_rows()
        )));
    }
    for (row, s) in scores.iter().enumerate() {
        if s.len() != directions.len() {
            return Err(Error::ScoreArity {
                row,
                found: s.len(),
                expected: directions.len(),
            });
        }
        if let Some(column) = s.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidScore { row, column });
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        for (i, dir) in directions.iter().enumerate() {
            let ord = match dir {
                Direction::HigherBetter => scores[b][i].total_cmp(&scores[a][i]),
                Direction::LowerBetter => scores[a][i].total_cmp(&scores[b][i]),
            };
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(Ranking {
        order,
        source: RankingSource::ScoreDerived,
    })
}
