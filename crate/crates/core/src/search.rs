//! Range-constrained beam search over the fixed-degree graph.
//!
//! Seeds are drawn only from buckets that intersect the query range. During
//! expansion every gathered neighbor first passes an O(1) scalar check; only
//! in-range, unseen neighbors cost a distance evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{squared_l2, Neighbor, Slot};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::layout::SENTINEL;
use crate::types::SearchParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    /// `k` results returned.
    Complete,
    /// Fewer than `k` in-range nodes were found.
    Truncated,
    /// No live node satisfies the range.
    NoMatch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Every distance computed, seeds included.
    pub distance_evals: usize,
    pub seed_evals: usize,
    /// In-range neighbors that had not been seen before in this query.
    pub fresh_in_range: usize,
    /// Neighbors discarded by the scalar check.
    pub range_rejected: usize,
    pub iterations: usize,
    pub expanded: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Ascending by `(dist, slot)`; distances are squared.
    pub neighbors: Vec<Neighbor>,
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn slots(&self) -> Vec<Slot> {
        self.neighbors.iter().map(|n| n.slot).collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct QueueEntry {
    nb: Neighbor,
    expanded: bool,
}

/// Bounded candidate list, ascending by `(dist, slot)`.
#[derive(Debug, Default)]
pub struct CandidateQueue {
    cap: usize,
    entries: Vec<QueueEntry>,
}

impl CandidateQueue {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            entries: Vec::with_capacity(cap + 1),
        }
    }

    fn reset(&mut self, cap: usize) {
        self.cap = cap;
        self.entries.clear();
    }

    /// Admits `nb` if it ranks within capacity. Callers never offer a slot
    /// twice.
    pub fn offer(&mut self, nb: Neighbor) -> bool {
        if self.entries.len() == self.cap && nb >= self.entries[self.cap - 1].nb {
            return false;
        }
        let pos = self.entries.partition_point(|e| e.nb < nb);
        self.entries.insert(pos, QueueEntry { nb, expanded: false });
        self.entries.truncate(self.cap);
        true
    }

    /// Marks and returns up to `width` best unexpanded entries.
    fn pop_unexpanded(&mut self, width: usize, out: &mut Vec<Slot>) {
        out.clear();
        for e in self.entries.iter_mut() {
            if out.len() == width {
                break;
            }
            if !e.expanded {
                e.expanded = true;
                out.push(e.nb.slot);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neighbors(&self) -> impl Iterator<Item = Neighbor> + '_ {
        self.entries.iter().map(|e| e.nb)
    }
}

/// Reusable per-thread search state: an epoch-stamped seen-set sized to the
/// index capacity plus scratch buffers.
#[derive(Debug, Default)]
pub struct Searcher {
    seen: Vec<u32>,
    epoch: u32,
    queue: CandidateQueue,
    frontier: Vec<Slot>,
}

impl Searcher {
    pub fn new(capacity: usize) -> Self {
        Self {
            seen: vec![0; capacity],
            epoch: 0,
            queue: CandidateQueue::default(),
            frontier: Vec::new(),
        }
    }

    fn begin(&mut self, capacity: usize) {
        if self.seen.len() < capacity {
            self.seen.resize(capacity, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.fill(0);
            self.epoch = 1;
        }
    }

    /// Returns true the first time `slot` is seen in the current query.
    #[inline]
    fn mark(&mut self, slot: Slot) -> bool {
        let cell = &mut self.seen[slot as usize];
        if *cell == self.epoch {
            false
        } else {
            *cell = self.epoch;
            true
        }
    }

    pub fn search(&mut self, index: &Index, query: &[f32], params: &SearchParams) -> Result<SearchResult> {
        self.search_probed(index, query, params, 0, index.len(), &mut |_| {})
    }

    /// Full-control entry point.
    ///
    /// `ordinal` selects the RNG stream, `limit` hides slots at or above it
    /// (readers of a partially inserted batch), and `probe` observes every
    /// slot whose distance is computed.
    pub fn search_probed(
        &mut self,
        index: &Index,
        query: &[f32],
        params: &SearchParams,
        ordinal: u64,
        limit: usize,
        probe: &mut dyn FnMut(Slot),
    ) -> Result<SearchResult> {
        params.validate()?;
        if query.len() != index.dim() {
            return Err(Error::DimensionMismatch {
                expected: index.dim(),
                actual: query.len(),
            });
        }
        let limit = limit.min(index.len());
        let mut stats = SearchStats::default();
        if limit == 0 {
            return Ok(SearchResult {
                neighbors: Vec::new(),
                outcome: SearchOutcome::NoMatch,
                stats,
            });
        }
        self.begin(index.capacity());
        self.queue.reset(params.itopk);
        let range = params.range;
        let store = &index.store;

        let seeds = self.sample_seeds(index, params, ordinal, limit);
        for &s in &seeds {
            let d = squared_l2(query, store.vector(s as usize));
            probe(s);
            stats.distance_evals += 1;
            stats.seed_evals += 1;
            self.queue.offer(Neighbor::new(s, d));
        }
        if seeds.is_empty() {
            return Ok(SearchResult {
                neighbors: Vec::new(),
                outcome: SearchOutcome::NoMatch,
                stats,
            });
        }

        let graph = &index.graph;
        let mut frontier = std::mem::take(&mut self.frontier);
        while stats.iterations < params.max_iterations {
            self.queue.pop_unexpanded(params.search_width, &mut frontier);
            if frontier.is_empty() {
                break;
            }
            stats.iterations += 1;
            stats.expanded += frontier.len();
            for &p in &frontier {
                for &v in graph.row(p as usize) {
                    if v == SENTINEL || v as usize >= limit {
                        continue;
                    }
                    let s_v = store.scalar(v as usize);
                    if s_v < range.lower || s_v > range.upper {
                        stats.range_rejected += 1;
                        continue;
                    }
                    if !self.mark(v) {
                        continue;
                    }
                    stats.fresh_in_range += 1;
                    let d = squared_l2(query, store.vector(v as usize));
                    probe(v);
                    stats.distance_evals += 1;
                    self.queue.offer(Neighbor::new(v, d));
                }
            }
        }
        self.frontier = frontier;

        let neighbors: Vec<Neighbor> = self.queue.neighbors().take(params.k).collect();
        let outcome = if neighbors.len() < params.k {
            SearchOutcome::Truncated
        } else {
            SearchOutcome::Complete
        };
        Ok(SearchResult {
            neighbors,
            outcome,
            stats,
        })
    }

    /// Targeted initialization: uniform draws from the members of the
    /// intersecting buckets, scalar-checked, with a linear scan of the
    /// buckets (boundary buckets first) when draws come up short.
    fn sample_seeds(&mut self, index: &Index, params: &SearchParams, ordinal: u64, limit: usize) -> Vec<Slot> {
        let meta = &index.buckets;
        let range = params.range;
        let buckets = meta.intersecting(&range);
        if buckets.is_empty() {
            return Vec::new();
        }
        let lists: Vec<&[Slot]> = buckets
            .clone()
            .map(|b| {
                let m = meta.members(b);
                &m[..m.partition_point(|&s| (s as usize) < limit)]
            })
            .collect();
        let mut cumulative = Vec::with_capacity(lists.len());
        let mut total = 0usize;
        for l in &lists {
            total += l.len();
            cumulative.push(total);
        }
        let mut seeds = Vec::with_capacity(params.seed_count);
        if total == 0 {
            return seeds;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        rng.set_stream(ordinal);
        let in_range = |s: Slot| range.contains(index.store.scalar(s as usize));
        for _ in 0..params.seed_count * 4 {
            if seeds.len() == params.seed_count {
                break;
            }
            let r = rng.random_range(0..total);
            let b = cumulative.partition_point(|&c| c <= r);
            let offset = r - if b == 0 { 0 } else { cumulative[b - 1] };
            let s = lists[b][offset];
            if in_range(s) && self.mark(s) {
                seeds.push(s);
            }
        }
        if seeds.len() < params.seed_count {
            let last = lists.len() - 1;
            let order = std::iter::once(0).chain((last > 0).then_some(last)).chain(1..last);
            'scan: for b in order {
                for &s in lists[b] {
                    if seeds.len() == params.seed_count {
                        break 'scan;
                    }
                    if in_range(s) && self.mark(s) {
                        seeds.push(s);
                    }
                }
            }
        }
        seeds
    }
}

impl Index {
    /// Single range-filtered query (RNG stream 0).
    pub fn search(&self, query: &[f32], params: &SearchParams) -> Result<SearchResult> {
        Searcher::new(self.capacity()).search(self, query, params)
    }

    /// Independent queries sharing `params`; query `i` uses RNG stream `i`,
    /// so results match issuing the queries one by one with those streams.
    pub fn search_batch(&self, queries: &[Vec<f32>], params: &SearchParams) -> Result<Vec<SearchResult>> {
        params.validate()?;
        queries
            .par_iter()
            .enumerate()
            .map_init(
                || Searcher::new(self.capacity()),
                |searcher, (i, q)| searcher.search_probed(self, q, params, i as u64, self.len(), &mut |_| {}),
            )
            .collect()
    }
}
