//! Top-down search over the search tree and the iterate-per-k baseline.
//!
//! The [`Engine`] owns the state of one detection run: the generated part of
//! the search tree with the status of every node, the result antichain, the
//! dominated violators (`dres`), and the count cache. The baseline, global and
//! proportional detectors all drive the same engine; the incremental ones only
//! differ in which nodes they re-examine when k grows.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Bound;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bounds::{validate_bounds, BoundsSpec};
use crate::data::{Dataset, Pattern, Ranking};
use crate::error::{BoundsError, Error, Result};
use crate::lattice::{generate_children, CountCache, GeneratedNodeLog};
use crate::prop::{k_tilde, KSchedule};

/// Work counters for one k.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    /// Patterns produced by children expansion.
    pub generated: u64,
    /// Bound tests, each needing a top-k count.
    pub evaluated: u64,
    /// Previously known violators re-tested by an incremental step.
    pub reevaluated: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, rhs: Self) {
        self.generated += rhs.generated;
        self.evaluated += rhs.evaluated;
        self.reevaluated += rhs.reevaluated;
        self.elapsed += rhs.elapsed;
    }
}

/// Most-general violators for every k of an audit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub per_k: BTreeMap<usize, BTreeSet<Pattern>>,
    pub stats: BTreeMap<usize, StepStats>,
}

impl ResultSet {
    pub fn at(&self, k: usize) -> Option<&BTreeSet<Pattern>> {
        self.per_k.get(&k)
    }

    pub fn totals(&self) -> StepStats {
        let mut total = StepStats::default();
        for s in self.stats.values() {
            total += *s;
        }
        total
    }

    /// Whether both runs report the same patterns for every k, ignoring statistics.
    pub fn same_patterns(&self, other: &ResultSet) -> bool {
        self.per_k == other.per_k
    }
}

/// State left behind by a single top-down search.
#[derive(Debug, Clone, Default)]
pub struct SearchOutcome {
    pub result: BTreeSet<Pattern>,
    /// Violators reached by the search that have an ancestor in `result`.
    pub dres: BTreeSet<Pattern>,
    /// Scheduled `k̃` per pattern; empty outside proportional mode.
    pub k_schedule: BTreeMap<Pattern, usize>,
    pub generated: GeneratedNodeLog,
    pub stats: StepStats,
}

/// Records violator `p` in the result antichain or among the dominated violators.
///
/// `p` is dominated if a proper subset of it is already in `result`. Otherwise
/// it joins `result`, and any result member that `p` generalizes moves to `dres`.
pub fn update(result: &mut BTreeSet<Pattern>, dres: &mut BTreeSet<Pattern>, p: Pattern) {
    result.remove(&p);
    dres.remove(&p);
    if result.iter().any(|r| r.is_proper_subset_of(&p)) {
        dres.insert(p);
        return;
    }
    let demoted: Vec<Pattern> = result
        .iter()
        .filter(|r| p.is_proper_subset_of(r))
        .cloned()
        .collect();
    for d in demoted {
        result.remove(&d);
        dres.insert(d);
    }
    result.insert(p);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeState {
    /// `s_D(p) < τ_s`; never expanded.
    Small,
    /// Meets the bound; children generated.
    Expanded,
    /// Below the bound; recorded in `result` or `dres`.
    Violating,
}

pub(crate) struct Engine<'a> {
    pub data: &'a Dataset,
    pub ranking: &'a Ranking,
    pub spec: &'a BoundsSpec,
    pub cache: CountCache,
    pub nodes: BTreeMap<Pattern, NodeState>,
    pub result: BTreeSet<Pattern>,
    pub dres: BTreeSet<Pattern>,
    pub schedule: Option<KSchedule>,
    /// Violators found by an incremental step, filed once the step settles.
    pub pending: Vec<Pattern>,
    pub log: GeneratedNodeLog,
    pub stats: StepStats,
}

impl<'a> Engine<'a> {
    pub fn new(data: &'a Dataset, ranking: &'a Ranking, spec: &'a BoundsSpec, with_schedule: bool) -> Self {
        let schedule = match (with_schedule, spec.alpha()) {
            (true, Some(alpha)) => Some(KSchedule::new(alpha, data.n_rows())),
            _ => None,
        };
        Engine {
            data,
            ranking,
            spec,
            cache: CountCache::new(),
            nodes: BTreeMap::new(),
            result: BTreeSet::new(),
            dres: BTreeSet::new(),
            schedule,
            pending: Vec::new(),
            log: GeneratedNodeLog::default(),
            stats: StepStats::default(),
        }
    }

    pub fn take_stats(&mut self) -> StepStats {
        std::mem::take(&mut self.stats)
    }

    /// Bound test at `k`; returns `(violates, count, size)`.
    pub fn evaluate(&mut self, p: &Pattern, k: usize) -> (bool, u64, u64) {
        self.stats.evaluated += 1;
        let size = self.cache.pattern_size(p, self.data);
        let count = self.cache.topk_count(p, self.data, self.ranking, k);
        (
            self.spec.violates(count, size, k, self.data.n_rows()),
            count,
            size,
        )
    }

    fn push_children(&mut self, p: &Pattern, queue: &mut VecDeque<Pattern>) {
        for child in generate_children(p, self.data.schema()) {
            self.stats.generated += 1;
            self.log.push(child.clone());
            queue.push_back(child);
        }
    }

    /// Algorithm-1 search from the root at `k`, discarding previous tree state.
    pub fn top_down_search(&mut self, k: usize) -> Result<()> {
        self.nodes.clear();
        self.result.clear();
        self.dres.clear();
        self.pending.clear();
        self.log = GeneratedNodeLog::default();
        if let Some(s) = self.schedule.as_mut() {
            s.clear();
        }
        let root = Pattern::empty();
        self.nodes.insert(root.clone(), NodeState::Expanded);
        let mut queue = VecDeque::new();
        self.push_children(&root, &mut queue);
        self.run_queue(queue, k, false)
    }

    /// FIFO loop over freshly generated nodes. Violators are filed at once,
    /// or parked in `pending` when `defer` is set.
    pub fn run_queue(&mut self, mut queue: VecDeque<Pattern>, k: usize, defer: bool) -> Result<()> {
        while let Some(p) = queue.pop_front() {
            let size = self.cache.pattern_size(&p, self.data);
            if size < self.spec.size_threshold {
                // sizes only shrink below p, so neither p nor its subtree can qualify
                self.nodes.insert(p, NodeState::Small);
                continue;
            }
            let (violates, count, size) = self.evaluate(&p, k);
            if violates {
                self.nodes.insert(p.clone(), NodeState::Violating);
                if defer {
                    self.pending.push(p);
                } else {
                    update(&mut self.result, &mut self.dres, p);
                }
            } else {
                self.mark_expanded(&p, count, size)?;
                self.push_children(&p, &mut queue);
            }
        }
        Ok(())
    }

    /// Marks `p` as meeting the bound and, in proportional mode, schedules its `k̃`.
    pub fn mark_expanded(&mut self, p: &Pattern, count: u64, size: u64) -> Result<()> {
        self.nodes.insert(p.clone(), NodeState::Expanded);
        if let Some(schedule) = self.schedule.as_mut() {
            let kt = k_tilde(count, size, schedule.alpha(), self.data.n_rows())?;
            schedule.set(p.clone(), kt, count);
        }
        Ok(())
    }

    /// Drops every generated search-tree descendant of `p` after `p` starts violating.
    pub fn collapse(&mut self, p: &Pattern) {
        let doomed: Vec<Pattern> = self
            .nodes
            .range((Bound::Excluded(p), Bound::Unbounded))
            .take_while(|(q, _)| q.has_prefix(p))
            .map(|(q, _)| q.clone())
            .collect();
        for q in doomed.iter().rev() {
            self.nodes.remove(q);
            self.result.remove(q);
            self.dres.remove(q);
            if let Some(s) = self.schedule.as_mut() {
                s.remove(q);
            }
        }
        self.pending.retain(|q| !(q != p && q.has_prefix(p)));
    }

    /// Files every pending violator and re-files all of `dres`, shortest
    /// patterns first, so `result` ends as the minimal violators.
    pub fn settle(&mut self) {
        let mut items: Vec<Pattern> = std::mem::take(&mut self.pending);
        items.extend(std::mem::take(&mut self.dres));
        items.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        items.dedup();
        for p in items {
            if self.nodes.get(&p) == Some(&NodeState::Violating) {
                update(&mut self.result, &mut self.dres, p);
            }
        }
    }

    pub fn outcome(&self) -> SearchOutcome {
        SearchOutcome {
            result: self.result.clone(),
            dres: self.dres.clone(),
            k_schedule: self
                .schedule
                .as_ref()
                .map(|s| s.entries().map(|(p, e)| (p.clone(), e.k_tilde)).collect())
                .unwrap_or_default(),
            generated: self.log.clone(),
            stats: self.stats,
        }
    }
}

pub(crate) fn check_k(spec: &BoundsSpec, data: &Dataset, k: usize) -> Result<()> {
    if k == 0 || k > data.n_rows() {
        return Err(Error::Bounds(BoundsError::Range {
            k_min: k,
            k_max: k,
            n_rows: data.n_rows(),
        }));
    }
    if let Some(schedule) = spec.schedule() {
        if schedule.get(k).is_none() {
            return Err(BoundsError::ScheduleGap(k).into());
        }
    }
    Ok(())
}

/// One top-down search at a single `k`, with result bookkeeping.
pub fn top_down_search(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec, k: usize) -> Result<SearchOutcome> {
    validate_bounds(spec, data)?;
    check_ranking(data, ranking)?;
    check_k(spec, data, k)?;
    let mut engine = Engine::new(data, ranking, spec, true);
    let started = Instant::now();
    engine.top_down_search(k)?;
    engine.stats.elapsed = started.elapsed();
    Ok(engine.outcome())
}

pub(crate) fn check_ranking(data: &Dataset, ranking: &Ranking) -> Result<()> {
    if ranking.len() != data.n_rows() {
        return Err(Error::MalformedRanking(format!(
            "ranking covers {} rows, dataset has {}",
            ranking.len(),
            data.n_rows()
        )));
    }
    Ok(())
}

/// The baseline: an independent top-down search for every k in the range.
pub fn iter_td(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec) -> Result<ResultSet> {
    validate_bounds(spec, data)?;
    check_ranking(data, ranking)?;
    let mut engine = Engine::new(data, ranking, spec, false);
    let mut out = ResultSet::default();
    for k in spec.ks() {
        let started = Instant::now();
        engine.top_down_search(k)?;
        engine.stats.elapsed = started.elapsed();
        out.per_k.insert(k, engine.result.clone());
        out.stats.insert(k, engine.take_stats());
    }
    Ok(out)
}
