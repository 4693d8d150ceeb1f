//! Global-bound detection that reuses the search tree across consecutive k.
//!
//! While the lower bound stays put, counts only grow as k grows: nodes that
//! met the bound keep meeting it, and only violators satisfied by the newly
//! admitted row can recover. Those are re-tested and, if they recovered, their
//! subtree is searched afresh. A step where the bound rises restarts from the
//! root with the count cache kept.

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use crate::bounds::{validate_bounds, BoundsSpec};
use crate::data::{Dataset, Pattern, Ranking};
use crate::error::{BoundsError, Error, Result};
use crate::lattice::generate_children;
use crate::search::{check_k, check_ranking, Engine, NodeState, ResultSet, SearchOutcome, StepStats};

pub struct GlobalSearch<'a> {
    engine: Engine<'a>,
    k: usize,
}

impl<'a> GlobalSearch<'a> {
    pub fn new(data: &'a Dataset, ranking: &'a Ranking, spec: &'a BoundsSpec) -> Result<Self> {
        if !spec.is_global() {
            return Err(BoundsError::ModeMismatch { expected: "global" }.into());
        }
        validate_bounds(spec, data)?;
        check_ranking(data, ranking)?;
        Ok(GlobalSearch {
            engine: Engine::new(data, ranking, spec, false),
            k: 0,
        })
    }

    pub fn start(&mut self, k: usize) -> Result<()> {
        check_k(self.engine.spec, self.engine.data, k)?;
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

    pub fn outcome(&self) -> SearchOutcome {
        self.engine.outcome()
    }

    pub fn take_stats(&mut self) -> StepStats {
        self.engine.take_stats()
    }

    /// Re-tests violator `b` at `k`. If it now meets the bound its subtree is
    /// searched, with new violators left pending. Returns whether `b` recovered.
    pub fn search_from_node(&mut self, b: &Pattern, k: usize) -> Result<bool> {
        let engine = &mut self.engine;
        engine.stats.reevaluated += 1;
        let (violates, count, size) = engine.evaluate(b, k);
        if violates {
            return Ok(false);
        }
        engine.result.remove(b);
        engine.dres.remove(b);
        engine.mark_expanded(b, count, size)?;
        let mut queue = VecDeque::new();
        for child in generate_children(b, engine.data.schema()) {
            engine.stats.generated += 1;
            engine.log.push(child.clone());
            queue.push_back(child);
        }
        engine.run_queue(queue, k, true)?;
        Ok(true)
    }

    /// Moves from `k - 1` to `k`.
    pub fn advance(&mut self, k: usize) -> Result<()> {
        if self.k == 0 || k != self.k + 1 {
            return Err(Error::CacheCoherence {
                pattern: "{}".into(),
                counted_up_to: self.k,
                expected: k.saturating_sub(1),
            });
        }
        check_k(self.engine.spec, self.engine.data, k)?;
        let spec = self.engine.spec;
        if spec.lower(k) != spec.lower(self.k) {
            return self.start(k);
        }
        self.k = k;

        let engine = &mut self.engine;
        let tracked: Vec<Pattern> = engine.result.iter().chain(engine.dres.iter()).cloned().collect();
        for p in &tracked {
            engine.cache.topk_count(p, engine.data, engine.ranking, k - 1);
        }
        let mut affected = engine.cache.advance_k(engine.data, engine.ranking, k, &tracked)?;
        affected.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

        for b in affected {
            // an earlier recovery may have regenerated b's subtree
            if engine_state(&self.engine, &b) != Some(NodeState::Violating) {
                continue;
            }
            self.search_from_node(&b, k)?;
        }
        self.engine.settle();
        Ok(())
    }
}

fn engine_state(engine: &Engine<'_>, p: &Pattern) -> Option<NodeState> {
    engine.nodes.get(p).copied()
}

/// Global-bound detection for every k, reusing state between consecutive k.
/// Returns the same patterns as the per-k baseline.
pub fn global_bounds(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec) -> Result<ResultSet> {
    let mut search = GlobalSearch::new(data, ranking, spec)?;
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
