//! Batched append-only insertion.
//!
//! A batch is appended at the tail, then wired in three stages: candidate
//! search (exact inside the target bucket plus a full-range graph search over
//! the pre-batch index), forward selection with diversity pruning, and
//! reverse rewiring of the chosen targets. Newly inserted nodes get a
//! freshness bias in the pruning test so that saturated rows admit them.

use std::collections::BTreeSet;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{squared_l2, Neighbor, Slot};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::layout::SENTINEL;
use crate::search::Searcher;
use crate::types::{RangePredicate, SearchParams, VectorRecord};

/// Knobs for one insertion call.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct InsertParams {
    /// Freshness bias in `(0, 1]`; `1` disables it.
    pub alpha: f64,
    /// Exact intra-bucket candidates per fresh node; defaults to `2 * k_max`.
    pub bucket_candidates: Option<usize>,
    /// Candidate queue width of the full-range search.
    pub itopk: usize,
    pub search_width: usize,
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl InsertParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if self.itopk == 0 || self.search_width == 0 {
            return Err(Error::InvalidParameter("itopk and search_width must be positive".into()));
        }
        Ok(())
    }
}

impl Default for InsertParams {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            bucket_candidates: None,
            itopk: 128,
            search_width: 4,
            max_iterations: 50,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InsertReport {
    pub batch_size: usize,
    pub slots: Range<usize>,
    /// Records bulk-built because the batch landed on an empty index.
    pub bulk_built: usize,
    pub forward_accepted: usize,
    pub forward_rejected: usize,
    pub reverse_requests: usize,
    pub reverse_accepted: usize,
    pub reverse_rejected: usize,
    pub reverse_already_present: usize,
    pub evictions_necessary: usize,
    pub evictions_redundant: usize,
    /// Fresh nodes that got their only pre-existing in-edge from the final
    /// reachability pass.
    pub forced_links: usize,
    /// Pre-existing rows whose adjacency changed.
    pub rewired_rows: Vec<Slot>,
    pub wall_ms: f64,
}

impl InsertReport {
    /// Sums per-batch reports into one.
    pub fn total(reports: impl IntoIterator<Item = InsertReport>) -> InsertReport {
        let mut acc = InsertReport::default();
        for r in reports {
            acc.absorb(r);
        }
        acc
    }

    fn absorb(&mut self, other: InsertReport) {
        self.batch_size += other.batch_size;
        self.bulk_built += other.bulk_built;
        self.wall_ms += other.wall_ms;
        if self.slots.is_empty() {
            self.slots = other.slots;
        } else {
            self.slots.end = other.slots.end;
        }
        self.forward_accepted += other.forward_accepted;
        self.forward_rejected += other.forward_rejected;
        self.reverse_requests += other.reverse_requests;
        self.reverse_accepted += other.reverse_accepted;
        self.reverse_rejected += other.reverse_rejected;
        self.reverse_already_present += other.reverse_already_present;
        self.evictions_necessary += other.evictions_necessary;
        self.evictions_redundant += other.evictions_redundant;
        self.forced_links += other.forced_links;
        self.rewired_rows.extend(other.rewired_rows);
        self.rewired_rows.sort_unstable();
        self.rewired_rows.dedup();
    }
}

/// Effective left-hand side of the pruning test, on squared distances:
/// a fresh candidate's distance is scaled by `alpha`, i.e. the squared
/// distance by `alpha²`.
#[inline]
pub fn effective_distance(dist_sq: f64, fresh: bool, alpha: f64) -> f64 {
    if fresh {
        alpha * alpha * dist_sq
    } else {
        dist_sq
    }
}

/// Greedy diversity selection for node `v`.
///
/// `candidates` must be sorted by ascending distance to `v`. A candidate `c`
/// is kept iff `d_eff(v, c) < dist(c, n)` for every already kept `n`. Stops
/// after `capacity` accepts.
pub fn select_neighbors(
    candidates: &[Neighbor],
    capacity: usize,
    alpha: f64,
    is_fresh: impl Fn(Slot) -> bool,
    dist: impl Fn(Slot, Slot) -> f64,
) -> Vec<Neighbor> {
    let mut kept: Vec<Neighbor> = Vec::with_capacity(capacity);
    for c in candidates {
        if kept.len() == capacity {
            break;
        }
        let lhs = effective_distance(c.dist, is_fresh(c.slot), alpha);
        if kept.iter().all(|n| lhs < dist(c.slot, n.slot)) {
            kept.push(*c);
        }
    }
    kept
}

/// Continues a greedy selection: candidates are tested against everything
/// already in `kept` and appended until `capacity` is reached.
pub fn extend_selection(
    kept: &mut Vec<Neighbor>,
    candidates: &[Neighbor],
    capacity: usize,
    alpha: f64,
    is_fresh: impl Fn(Slot) -> bool,
    dist: impl Fn(Slot, Slot) -> f64,
) {
    for c in candidates {
        if kept.len() >= capacity {
            break;
        }
        let lhs = effective_distance(c.dist, is_fresh(c.slot), alpha);
        if kept.iter().all(|n| lhs < dist(c.slot, n.slot)) {
            kept.push(*c);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Necessary,
    Redundant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewireOutcome {
    /// Written into an empty slot.
    Free { position: usize },
    /// Written over the evicted neighbor.
    Evicted { position: usize, evicted: Slot, region: Region },
    Rejected,
    AlreadyPresent,
}

impl RewireOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, RewireOutcome::Free { .. } | RewireOutcome::Evicted { .. })
    }
}

/// Offers fresh node `q` to the row of `v`.
///
/// An empty slot is taken unconditionally. A full row admits `q` only if
/// `d_eff(v, q) < dist(q, n)` for every current neighbor `n`; the victim is
/// the neighbor farthest from `v`, taken from the redundant region
/// `[k_local, len)` when that region is non-empty.
pub fn try_rewire(
    row: &mut [Slot],
    q: Slot,
    dist_vq: f64,
    alpha: f64,
    k_local: usize,
    dist_to_v: impl Fn(Slot) -> f64,
    dist_to_q: impl Fn(Slot) -> f64,
) -> RewireOutcome {
    try_rewire_preferring(row, q, dist_vq, alpha, k_local, dist_to_v, dist_to_q, |_| false)
}

/// Like [`try_rewire`], but redundant-region victims accepted by `prefer`
/// are evicted before any other neighbor.
#[allow(clippy::too_many_arguments)]
pub fn try_rewire_preferring(
    row: &mut [Slot],
    q: Slot,
    dist_vq: f64,
    alpha: f64,
    k_local: usize,
    dist_to_v: impl Fn(Slot) -> f64,
    dist_to_q: impl Fn(Slot) -> f64,
    prefer: impl Fn(Slot) -> bool,
) -> RewireOutcome {
    if row.contains(&q) {
        return RewireOutcome::AlreadyPresent;
    }
    if let Some(position) = row.iter().position(|&s| s == SENTINEL) {
        row[position] = q;
        return RewireOutcome::Free { position };
    }
    let lhs = effective_distance(dist_vq, true, alpha);
    if !row.iter().all(|&n| lhs < dist_to_q(n)) {
        return RewireOutcome::Rejected;
    }
    let (position, region) = farthest_victim(row, k_local, &dist_to_v, &prefer)
        .filter(|(_, r)| *r == Region::Redundant)
        .or_else(|| farthest_victim(row, k_local, &dist_to_v, |_| true))
        .expect("row is full");
    let evicted = row[position];
    row[position] = q;
    RewireOutcome::Evicted {
        position,
        evicted,
        region,
    }
}

/// Position of the neighbor farthest from the row owner among those allowed
/// by `eligible`, preferring the redundant region.
fn farthest_victim(
    row: &[Slot],
    k_local: usize,
    dist_to_v: &impl Fn(Slot) -> f64,
    eligible: impl Fn(Slot) -> bool,
) -> Option<(usize, Region)> {
    let split = k_local.min(row.len());
    let pick = |range: Range<usize>| {
        range
            .filter(|&i| row[i] != SENTINEL && eligible(row[i]))
            .map(|i| (Neighbor::new(row[i], dist_to_v(row[i])), i))
            .max_by(|a, b| a.0.cmp(&b.0))
            .map(|(_, i)| i)
    };
    pick(split..row.len())
        .map(|i| (i, Region::Redundant))
        .or_else(|| pick(0..split).map(|i| (i, Region::Necessary)))
}

struct Candidates {
    q: Slot,
    list: Vec<Neighbor>,
}

impl Index {
    /// Inserts records in batches of `batch_size`, returning one report per
    /// batch.
    pub fn insert(&mut self, records: &[VectorRecord], batch_size: usize, params: &InsertParams) -> Result<Vec<InsertReport>> {
        if batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        records.chunks(batch_size).map(|b| self.insert_batch(b, params)).collect()
    }

    /// Appends one batch and wires it into the graph.
    ///
    /// On an empty index the first `bucket_capacity` records are bulk-built
    /// (fixing bucket boundaries) and the rest are inserted as a batch.
    pub fn insert_batch(&mut self, records: &[VectorRecord], params: &InsertParams) -> Result<InsertReport> {
        params.validate()?;
        let start = Instant::now();
        if records.is_empty() {
            return Ok(InsertReport {
                slots: self.len()..self.len(),
                ..Default::default()
            });
        }
        for r in records {
            r.validate(self.dim())?;
        }
        let available = self.capacity() - self.len();
        if records.len() > available {
            return Err(Error::CapacityExhausted {
                requested: records.len(),
                available,
                capacity: self.capacity(),
            });
        }

        if self.is_empty() {
            let prefix = records.len().min(self.params.bucket_capacity);
            let (built, _) = Index::build_with(&records[..prefix], self.params.clone(), Some(self.capacity()), None)?;
            *self = built;
            let mut report = InsertReport {
                batch_size: prefix,
                slots: 0..prefix,
                bulk_built: prefix,
                ..Default::default()
            };
            if prefix < records.len() {
                report.absorb(self.insert_batch(&records[prefix..], params)?);
            }
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            return Ok(report);
        }

        // Stage A: zero-shift append.
        let before = self.len();
        let slots = self.append_batch(records)?;
        let fresh = |s: Slot| (s as usize) >= before;
        let mut report = InsertReport {
            batch_size: records.len(),
            slots: slots.clone(),
            ..Default::default()
        };

        // Stage B: candidates, read-only over the graph.
        let candidates = self.gather_candidates(slots.clone(), before, params);

        // Stage C: forward rows. Intra-bucket candidates are pruned first
        // into the necessary prefix, then the rest fill the remaining slots.
        let k_max = self.params.k_max;
        let k_local = self.params.k_local;
        let forward: Vec<(Slot, Vec<Neighbor>, usize)> = candidates
            .par_iter()
            .map(|c| {
                let store = &self.store;
                let dist = |a: Slot, b: Slot| squared_l2(store.vector(a as usize), store.vector(b as usize));
                let own = self.buckets.bucket_of_slot(c.q);
                let (local, other): (Vec<Neighbor>, Vec<Neighbor>) =
                    c.list.iter().partition(|n| self.buckets.bucket_of_slot(n.slot) == own);
                let mut kept = select_neighbors(&local, k_local.min(k_max), params.alpha, fresh, dist);
                let mut rest: Vec<Neighbor> = local.iter().filter(|n| !kept.contains(n)).chain(other.iter()).copied().collect();
                rest.sort_unstable();
                extend_selection(&mut kept, &rest, k_max, params.alpha, fresh, dist);
                let rejected = c.list.len() - kept.len();
                // Slots the pruning left empty take the nearest unselected
                // intra-bucket candidates, like local fallback edges.
                for n in &local {
                    if kept.len() >= k_max {
                        break;
                    }
                    if !kept.contains(n) {
                        kept.push(*n);
                    }
                }
                (c.q, kept, rejected)
            })
            .collect();
        for (q, row, rejected) in &forward {
            let slots: Vec<Slot> = row.iter().map(|n| n.slot).collect();
            self.graph.set_row(*q as usize, &slots);
            report.forward_accepted += row.len();
            report.forward_rejected += rejected;
        }

        // Stage D: reverse requests grouped by target, serial within a row.
        let mut requests: Vec<(Slot, Neighbor)> = forward
            .iter()
            .flat_map(|(q, row, _)| row.iter().map(move |n| (n.slot, Neighbor::new(*q, n.dist))))
            .collect();
        requests.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        report.reverse_requests = requests.len();
        let groups: Vec<&[(Slot, Neighbor)]> = requests.chunk_by(|a, b| a.0 == b.0).collect();
        let rewired: Vec<(Slot, Vec<Slot>, Vec<RewireOutcome>)> = groups
            .par_iter()
            .map(|group| {
                let v = group[0].0;
                let store = &self.store;
                let mut row = self.graph.row(v as usize).to_vec();
                let vv = store.vector(v as usize);
                let outcomes = group
                    .iter()
                    .map(|(_, req)| {
                        let vq = store.vector(req.slot as usize);
                        let bv = self.buckets.bucket_of_slot(v);
                        let q_local = self.buckets.bucket_of_slot(req.slot) == bv;
                        try_rewire_preferring(
                            &mut row,
                            req.slot,
                            req.dist,
                            params.alpha,
                            k_local,
                            |n| squared_l2(vv, store.vector(n as usize)),
                            |n| squared_l2(vq, store.vector(n as usize)),
                            |n| q_local && self.buckets.bucket_of_slot(n) != bv,
                        )
                    })
                    .collect();
                (v, row, outcomes)
            })
            .collect();
        for (v, row, outcomes) in rewired {
            let mut changed = false;
            for o in outcomes {
                match o {
                    RewireOutcome::Free { .. } => {
                        report.reverse_accepted += 1;
                        changed = true;
                    }
                    RewireOutcome::Evicted { region, .. } => {
                        report.reverse_accepted += 1;
                        changed = true;
                        match region {
                            Region::Necessary => report.evictions_necessary += 1,
                            Region::Redundant => report.evictions_redundant += 1,
                        }
                    }
                    RewireOutcome::Rejected => report.reverse_rejected += 1,
                    RewireOutcome::AlreadyPresent => report.reverse_already_present += 1,
                }
            }
            if changed {
                self.graph.row_mut(v as usize).copy_from_slice(&row);
                if !fresh(v) {
                    report.rewired_rows.push(v);
                }
            }
        }
        self.relink_orphans(before, &candidates, &forward, &mut report);
        report.rewired_rows.sort_unstable();
        report.rewired_rows.dedup();
        report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(report)
    }

    /// Reachability repair after stage D. Every fresh node gets an in-edge
    /// from a pre-existing node, and every older node that lost its last
    /// in-edge to an eviction gets one back. Victims must keep another
    /// in-edge and are never fresh.
    fn relink_orphans(
        &mut self,
        before: usize,
        candidates: &[Candidates],
        forward: &[(Slot, Vec<Neighbor>, usize)],
        report: &mut InsertReport,
    ) {
        let count = self.len();
        let k_local = self.params.k_local;
        let mut indeg = vec![0u32; count];
        let mut old_in = vec![false; count - before];
        for (u, row) in self.graph.rows(count).chunks_exact(self.graph.degree()).enumerate() {
            for &v in row {
                if v == SENTINEL {
                    continue;
                }
                indeg[v as usize] += 1;
                if u < before && v as usize >= before {
                    old_in[v as usize - before] = true;
                }
            }
        }
        let mut needy: Vec<(Slot, Vec<Slot>)> = Vec::new();
        for u in 0..before {
            if indeg[u] == 0 {
                let uv = self.store.vector(u);
                let mut out: Vec<Neighbor> = self
                    .graph
                    .neighbors(u)
                    .filter(|&w| (w as usize) < before)
                    .map(|w| Neighbor::new(w, squared_l2(uv, self.store.vector(w as usize))))
                    .collect();
                out.sort_unstable();
                needy.push((u as Slot, out.into_iter().map(|n| n.slot).collect()));
            }
        }
        for (i, c) in candidates.iter().enumerate() {
            if old_in[i] {
                continue;
            }
            let targets = forward[i]
                .1
                .iter()
                .chain(c.list.iter())
                .map(|n| n.slot)
                .filter(|&v| (v as usize) < before)
                .collect();
            needy.push((c.q, targets));
        }

        for (q, targets) in needy {
            for v in targets {
                if self.graph.row(v as usize).contains(&q) {
                    continue;
                }
                let store = &self.store;
                let vv = store.vector(v as usize);
                let row = self.graph.row_mut(v as usize);
                let position = match row.iter().position(|&s| s == SENTINEL) {
                    Some(p) => Some((p, None)),
                    None => farthest_victim(row, k_local, &|n| squared_l2(vv, store.vector(n as usize)), |n| {
                        (n as usize) < before && indeg[n as usize] >= 2
                    })
                    .map(|(p, region)| (p, Some(region))),
                };
                let Some((p, region)) = position else { continue };
                let old = row[p];
                if old != SENTINEL {
                    indeg[old as usize] -= 1;
                }
                row[p] = q;
                indeg[q as usize] += 1;
                match region {
                    Some(Region::Necessary) => report.evictions_necessary += 1,
                    Some(Region::Redundant) => report.evictions_redundant += 1,
                    None => {}
                }
                report.forced_links += 1;
                report.rewired_rows.push(v);
                break;
            }
        }
    }

    fn gather_candidates(&self, slots: Range<usize>, before: usize, params: &InsertParams) -> Vec<Candidates> {
        let c1 = params.bucket_candidates.unwrap_or(2 * self.params.k_max);
        let search = SearchParams {
            k: params.itopk,
            range: RangePredicate::unbounded(),
            itopk: params.itopk,
            search_width: params.search_width,
            max_iterations: params.max_iterations,
            seed_count: params.itopk.min(32),
            rng_seed: params.rng_seed,
        };
        slots
            .into_par_iter()
            .map_init(
                || Searcher::new(self.capacity()),
                |searcher, q| {
                    let q = q as Slot;
                    let qv = self.store.vector(q as usize);
                    let bucket = self.buckets.bucket_of_slot(q);
                    let mut local: Vec<Neighbor> = self
                        .buckets
                        .members(bucket)
                        .iter()
                        .filter(|&&s| s != q)
                        .map(|&s| Neighbor::new(s, squared_l2(qv, self.store.vector(s as usize))))
                        .collect();
                    local.sort_unstable();
                    local.truncate(c1);
                    let global = searcher
                        .search_probed(self, qv, &search, q as u64, before, &mut |_| {})
                        .map(|r| r.neighbors)
                        .unwrap_or_default();
                    let mut seen: BTreeSet<Slot> = local.iter().map(|n| n.slot).collect();
                    let mut list = local;
                    list.extend(global.into_iter().filter(|n| seen.insert(n.slot)));
                    list.sort_unstable();
                    Candidates { q, list }
                },
            )
            .collect()
    }
}
