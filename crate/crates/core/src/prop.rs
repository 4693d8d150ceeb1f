//! Proportional-representation detection that carries search state across k.
//!
//! Between two consecutive prefixes only the newly admitted row changes any
//! count. Nodes it satisfies are revisited by a selective descent from the
//! root; every other node keeps its count, so its bound can only be crossed at
//! a precomputed position `k̃`, which the [`KSchedule`] tracks.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use crate::bounds::{validate_bounds, Alpha, BoundsSpec};
use crate::data::{Dataset, Pattern, Ranking};
use crate::error::{BoundsError, Error, Result};
use crate::search::{check_ranking, Engine, NodeState, ResultSet, SearchOutcome, StepStats};

/// Smallest k at which `count` frozen matches fall below `alpha * size * k / n`,
/// i.e. `floor(count * n * den / (num * size)) + 1`.
pub fn k_tilde(count: u64, size: u64, alpha: Alpha, n: usize) -> Result<usize> {
    let denom = alpha.numer() as u128 * size as u128;
    if denom == 0 {
        return Err(Error::UndefinedSchedule);
    }
    let kt = (count as u128 * n as u128 * alpha.denom() as u128) / denom + 1;
    Ok(usize::try_from(kt).unwrap_or(usize::MAX))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub k_tilde: usize,
    pub count_at_insert: u64,
}

/// Future bound crossings of nodes that currently meet the proportional bound.
///
/// A node is stored only when its `k̃` undercuts the `k̃` of every one of its
/// search-tree ancestors, so stored values strictly decrease down any branch.
/// A node that does not undercut would be dominated by the ancestor that
/// crosses first; it stays dormant under that ancestor and is re-examined
/// whenever the ancestor's `k̃` moves.
#[derive(Debug, Clone)]
pub struct KSchedule {
    alpha: Alpha,
    n: usize,
    entries: BTreeMap<Pattern, ScheduleEntry>,
    due: BTreeSet<(usize, Pattern)>,
    // k̃ of every node meeting the bound, stored or dormant
    tilde: HashMap<Pattern, ScheduleEntry>,
    suppressor: HashMap<Pattern, Pattern>,
    dependents: HashMap<Pattern, BTreeSet<Pattern>>,
}

impl KSchedule {
    pub fn new(alpha: Alpha, n: usize) -> Self {
        KSchedule {
            alpha,
            n,
            entries: BTreeMap::new(),
            due: BTreeSet::new(),
            tilde: HashMap::new(),
            suppressor: HashMap::new(),
            dependents: HashMap::new(),
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn dataset_size(&self) -> usize {
        self.n
    }

    /// Stored entries in canonical pattern order.
    pub fn entries(&self) -> impl Iterator<Item = (&Pattern, &ScheduleEntry)> {
        self.entries.iter()
    }

    pub fn get(&self, p: &Pattern) -> Option<&ScheduleEntry> {
        self.entries.get(p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `k̃` of a node meeting the bound, whether stored or dormant.
    pub fn k_tilde_of(&self, p: &Pattern) -> Option<usize> {
        self.tilde.get(p).map(|e| e.k_tilde)
    }

    pub(crate) fn clear(&mut self) {
        *self = KSchedule::new(self.alpha, self.n);
    }

    /// Records the current `k̃` of `p` and re-examines the nodes it suppresses.
    pub(crate) fn set(&mut self, p: Pattern, k_tilde: usize, count: u64) {
        self.tilde.insert(
            p.clone(),
            ScheduleEntry {
                k_tilde,
                count_at_insert: count,
            },
        );
        self.resolve(&p);
        if let Some(deps) = self.dependents.remove(&p) {
            for d in deps {
                self.suppressor.remove(&d);
                if self.tilde.contains_key(&d) {
                    self.resolve(&d);
                }
            }
        }
    }

    pub(crate) fn remove(&mut self, p: &Pattern) {
        self.detach(p);
        self.tilde.remove(p);
        if let Some(deps) = self.dependents.remove(p) {
            for d in deps {
                self.suppressor.remove(&d);
                if self.tilde.contains_key(&d) {
                    self.resolve(&d);
                }
            }
        }
    }

    /// Pops the next stored entry with `k̃ <= k`, ancestors before descendants.
    pub(crate) fn pop_due(&mut self, k: usize) -> Option<Pattern> {
        let (kt, p) = self.due.first()?.clone();
        if kt > k {
            return None;
        }
        self.detach(&p);
        Some(p)
    }

    fn detach(&mut self, p: &Pattern) {
        if let Some(e) = self.entries.remove(p) {
            self.due.remove(&(e.k_tilde, p.clone()));
        }
        if let Some(s) = self.suppressor.remove(p) {
            if let Some(set) = self.dependents.get_mut(&s) {
                set.remove(p);
                if set.is_empty() {
                    self.dependents.remove(&s);
                }
            }
        }
    }

    fn resolve(&mut self, p: &Pattern) {
        self.detach(p);
        let Some(&entry) = self.tilde.get(p) else {
            return;
        };
        let mut threshold: Option<(usize, Pattern)> = None;
        for prefix in p.proper_prefixes() {
            if let Some(e) = self.tilde.get(&prefix) {
                if threshold.as_ref().map_or(true, |(t, _)| e.k_tilde < *t) {
                    threshold = Some((e.k_tilde, prefix));
                }
            }
        }
        match threshold {
            Some((t, by)) if entry.k_tilde >= t => {
                self.dependents.entry(by.clone()).or_default().insert(p.clone());
                self.suppressor.insert(p.clone(), by);
            }
            _ => {
                self.entries.insert(p.clone(), entry);
                self.due.insert((entry.k_tilde, p.clone()));
            }
        }
    }
}

/// Incremental proportional detection over consecutive k.
pub struct PropSearch<'a> {
    engine: Engine<'a>,
    k: usize,
}

impl<'a> PropSearch<'a> {
    pub fn new(data: &'a Dataset, ranking: &'a Ranking, spec: &'a BoundsSpec) -> Result<Self> {
        if spec.alpha().is_none() {
            return Err(BoundsError::ModeMismatch {
                expected: "proportional",
            }
            .into());
        }
        validate_bounds(spec, data)?;
        check_ranking(data, ranking)?;
        Ok(PropSearch {
            engine: Engine::new(data, ranking, spec, true),
            k: 0,
        })
    }

    /// Full top-down search at `k`, populating result, dres and the schedule.
    pub fn start(&mut self, k: usize) -> Result<()> {
        crate::search::check_k(self.engine.spec, self.engine.data, k)?;
        self.engine.top_down_search(k)?;
        self.k = k;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn result(&self) -> &BTreeSet<Pattern> {
        &self.engine.result
    }

    pub fn dres(&self) -> &BTreeSet<Pattern> {
        &self.engine.dres
    }

    pub fn schedule(&self) -> &KSchedule {
        self.engine.schedule.as_ref().expect("proportional engine keeps a schedule")
    }

    pub fn outcome(&self) -> SearchOutcome {
        self.engine.outcome()
    }

    pub fn take_stats(&mut self) -> StepStats {
        self.engine.take_stats()
    }

    /// Moves from `k - 1` to `k`: selective descent, scheduled crossings, then
    /// re-filing of all violators.
    pub fn advance(&mut self, k: usize) -> Result<()> {
        self.selective_td(k)?;
        self.fire_due(k)?;
        self.engine.settle();
        Ok(())
    }

    /// Revisits the nodes satisfied by `R(D)[k]`, starting below the root.
    /// Only their counts moved, so only they can change status here.
    pub fn selective_td(&mut self, k: usize) -> Result<()> {
        if k != self.k + 1 || self.k == 0 {
            return Err(Error::CacheCoherence {
                pattern: "{}".into(),
                counted_up_to: self.k,
                expected: k.saturating_sub(1),
            });
        }
        crate::search::check_k(self.engine.spec, self.engine.data, k)?;
        self.k = k;
        let engine = &mut self.engine;
        let row = engine.data.row(engine.ranking.at(k)).to_vec();
        let width = row.len();
        let matching_children = |p: &Pattern| -> Vec<Pattern> {
            let start = p.max_attribute().map_or(0, |m| m + 1);
            (start..width).map(|a| p.extended(a, row[a])).collect()
        };

        let mut queue: VecDeque<Pattern> = matching_children(&Pattern::empty()).into();
        while let Some(p) = queue.pop_front() {
            let Some(&state) = engine.nodes.get(&p) else {
                continue;
            };
            match state {
                NodeState::Small => {}
                NodeState::Expanded => {
                    let (violates, count, size) = engine.evaluate(&p, k);
                    if violates {
                        engine.collapse(&p);
                        engine.nodes.insert(p.clone(), NodeState::Violating);
                        if let Some(s) = engine.schedule.as_mut() {
                            s.remove(&p);
                        }
                        engine.pending.push(p);
                    } else {
                        engine.mark_expanded(&p, count, size)?;
                        queue.extend(matching_children(&p));
                    }
                }
                NodeState::Violating => {
                    engine.stats.reevaluated += 1;
                    let (violates, count, size) = engine.evaluate(&p, k);
                    if !violates {
                        engine.result.remove(&p);
                        engine.dres.remove(&p);
                        engine.mark_expanded(&p, count, size)?;
                        let mut fresh = VecDeque::new();
                        for child in crate::lattice::generate_children(&p, engine.data.schema()) {
                            engine.stats.generated += 1;
                            engine.log.push(child.clone());
                            fresh.push_back(child);
                        }
                        engine.run_queue(fresh, k, true)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Processes schedule entries whose `k̃` is reached. Their counts are
    /// unchanged since scheduling, so each now falls below its bound; the
    /// crossing is rechecked against the cache before it is acted on.
    pub fn fire_due(&mut self, k: usize) -> Result<()> {
        let engine = &mut self.engine;
        while let Some(p) = engine.schedule.as_mut().and_then(|s| s.pop_due(k)) {
            if engine.nodes.get(&p) != Some(&NodeState::Expanded) {
                continue;
            }
            let (violates, count, size) = engine.evaluate(&p, k);
            if violates {
                engine.collapse(&p);
                engine.nodes.insert(p.clone(), NodeState::Violating);
                if let Some(s) = engine.schedule.as_mut() {
                    s.remove(&p);
                }
                engine.pending.push(p);
            } else {
                engine.mark_expanded(&p, count, size)?;
            }
        }
        Ok(())
    }
}

/// Proportional-bound detection for every k, reusing state between
/// consecutive k. Returns the same patterns as the per-k baseline.
pub fn prop_bounds(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec) -> Result<ResultSet> {
    let mut search = PropSearch::new(data, ranking, spec)?;
    let mut out = ResultSet::default();
    for k in spec.ks() {
        let started = Instant::now();
        if k == spec.k_min {
            search.start(k)?;
        } else {
            search.advance(k)?;
        }
        let mut stats = search.take_stats();
        stats.elapsed = started.elapsed();
        out.per_k.insert(k, search.result().clone());
        out.stats.insert(k, stats);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::students;
    use crate::search::{iter_td, top_down_search};

    fn alpha09() -> Alpha {
        Alpha::new(9, 10).unwrap()
    }

    #[test]
    fn k_tilde_examples() {
        assert_eq!(k_tilde(2, 8, alpha09(), 16).unwrap(), 5);
        assert_eq!(k_tilde(3, 6, alpha09(), 16).unwrap(), 9);
        let one = Alpha::new(1, 1).unwrap();
        assert_eq!(k_tilde(16, 16, one, 16).unwrap(), 17);
        assert!(k_tilde(16, 16, alpha09(), 16).unwrap() > 16);
        assert!(matches!(k_tilde(1, 0, alpha09(), 16), Err(Error::UndefinedSchedule)));
    }

    #[test]
    fn k_tilde_is_the_first_crossing() {
        let alpha = Alpha::new(4, 5).unwrap();
        for n in [10usize, 37, 100] {
            for size in 1..=n as u64 {
                for count in 0..=size {
                    let kt = k_tilde(count, size, alpha, n).unwrap();
                    let spec = BoundsSpec::proportional(1, 1, 1, alpha);
                    assert!(spec.violates(count, size, kt, n));
                    if kt > 1 {
                        assert!(!spec.violates(count, size, kt - 1, n));
                    }
                }
            }
        }
    }

    #[test]
    fn running_example_schedule() {
        let (data, ranking) = students();
        let spec = BoundsSpec::proportional(5, 4, 5, alpha09());
        let mut search = PropSearch::new(&data, &ranking, &spec).unwrap();
        search.start(4).unwrap();
        let scheduled: Vec<(String, usize)> = search
            .schedule()
            .entries()
            .map(|(p, e)| (data.describe(p), e.k_tilde))
            .collect();
        assert_eq!(
            scheduled,
            vec![
                ("{Gender=F}".to_string(), 5),
                ("{Gender=M}".to_string(), 5),
                ("{School=MS}".to_string(), 7),
                ("{Address=R}".to_string(), 7),
            ]
        );
        let ms_r = data.pattern(&[("School", "MS"), ("Address", "R")]).unwrap();
        assert!(search.schedule().get(&ms_r).is_none());
        assert_eq!(search.schedule().k_tilde_of(&ms_r), Some(9));

        search.advance(5).unwrap();
        let f = data.pattern(&[("Gender", "F")]).unwrap();
        let u = data.pattern(&[("Address", "U")]).unwrap();
        let fail1 = data.pattern(&[("Failures", "1")]).unwrap();
        assert!(search.result().contains(&f));
        assert!(search.result().contains(&u));
        assert!(search.result().contains(&fail1));
    }

    #[test]
    fn single_k_equals_top_down() {
        let (data, ranking) = students();
        let spec = BoundsSpec::proportional(3, 7, 7, alpha09());
        let res = prop_bounds(&data, &ranking, &spec).unwrap();
        let single = top_down_search(&data, &ranking, &spec, 7).unwrap();
        assert_eq!(res.per_k[&7], single.result);
    }

    #[test]
    fn whole_range_matches_baseline_on_students() {
        let (data, ranking) = students();
        for tau in 1..=6 {
            for alpha in ["0.5", "0.8", "0.9", "1", "1.3"] {
                let spec = BoundsSpec::proportional(tau, 1, 16, alpha.parse().unwrap());
                let fast = prop_bounds(&data, &ranking, &spec).unwrap();
                let slow = iter_td(&data, &ranking, &spec).unwrap();
                assert!(fast.same_patterns(&slow), "tau={tau} alpha={alpha}");
            }
        }
    }

    #[test]
    fn rejects_global_spec() {
        let (data, ranking) = students();
        let spec = BoundsSpec::global(1, 1, 2, crate::bounds::LowerSchedule::flat(1, 1, 2));
        assert!(PropSearch::new(&data, &ranking, &spec).is_err());
    }
}
