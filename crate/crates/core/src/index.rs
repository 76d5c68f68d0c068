//! The index: unified storage, fixed-degree adjacency and bucket metadata.

use std::ops::Range;
use std::time::Instant;

use crate::build::{
    build_global_graph, build_local_phase, fuse_remote_edges, size_histogram, BuildReport, FuseConfig, FuseStats,
    GlobalGraph, LocalGraphDraft,
};
use crate::distance::Slot;
use crate::error::{Error, Result};
use crate::layout::{AdjacencyMatrix, BucketMeta, VectorStore};
use crate::types::{BuildParams, RangePredicate, VectorRecord};

/// A range-filtered ANN index over a bucket-partitioned fixed-degree graph.
#[derive(Debug)]
pub struct Index {
    pub(crate) store: VectorStore,
    pub(crate) graph: AdjacencyMatrix,
    pub(crate) buckets: BucketMeta,
    pub(crate) params: BuildParams,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Index {
    /// An index with no rows. Bucket boundaries are fixed by the first build
    /// or the first inserted batch.
    pub fn empty(dim: usize, capacity: usize, params: BuildParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            store: VectorStore::with_capacity(dim, capacity)?,
            graph: AdjacencyMatrix::new(capacity, params.k_max),
            buckets: BucketMeta::from_boundaries(vec![0.0, 0.0])?,
            params,
        })
    }

    /// Stores the records and partitions them into buckets, without edges.
    ///
    /// Capacity is `ceil(len * headroom)` unless `capacity` overrides it.
    pub fn from_records(records: &[VectorRecord], params: BuildParams, capacity: Option<usize>) -> Result<Self> {
        params.validate()?;
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidParameter("cannot build an index from zero records".into()))?;
        let dim = first.vector.len();
        let capacity = capacity.unwrap_or_else(|| ((records.len() as f64) * params.headroom).ceil() as usize);
        if capacity < records.len() {
            return Err(Error::CapacityExhausted {
                requested: records.len(),
                available: capacity,
                capacity,
            });
        }
        let mut store = VectorStore::with_capacity(dim, capacity)?;
        store.append(records)?;
        let buckets = BucketMeta::partition(store.scalars(), params.bucket_capacity, params.partition)?;
        Ok(Self {
            graph: AdjacencyMatrix::new(capacity, params.k_max),
            store,
            buckets,
            params,
        })
    }

    /// Full static build: partition, local routers, global graph, fusion.
    pub fn build(records: &[VectorRecord], params: BuildParams) -> Result<(Self, BuildReport)> {
        Self::build_with(records, params, None, None)
    }

    /// Static build with an explicit capacity and/or a precomputed global
    /// graph (which only depends on the vectors and the global degree).
    pub fn build_with(
        records: &[VectorRecord],
        params: BuildParams,
        capacity: Option<usize>,
        global: Option<&GlobalGraph>,
    ) -> Result<(Self, BuildReport)> {
        let start = Instant::now();
        let mut index = Self::from_records(records, params, capacity)?;
        let partition_ms = elapsed_ms(start);

        // Global before local keeps the two large intermediates from
        // coexisting with the descent buffers.
        let t = Instant::now();
        let n = index.len();
        let (owned, stats) = match global {
            Some(_) => (None, None),
            None if n >= 2 => {
                let (g, s) = build_global_graph(&index.store, n, &index.params)?;
                (Some(g), Some(s))
            }
            None => (None, None),
        };
        let global_phase_ms = elapsed_ms(t);

        let t = Instant::now();
        let draft = index.build_local_phase();
        let local_phase_ms = elapsed_ms(t);

        let t = Instant::now();
        let fuse = match global.or(owned.as_ref()) {
            Some(g) => index.fuse_remote_edges(&draft, g)?,
            None => index.install_local_rows(&draft),
        };
        let fuse_ms = elapsed_ms(t);

        let sizes = index.buckets.bucket_sizes();
        let report = BuildReport {
            nodes: n,
            capacity: index.capacity(),
            dim: index.dim(),
            k_max: index.params.k_max,
            k_local: index.params.k_local,
            buckets: index.buckets.bucket_count(),
            partition_ms,
            local_phase_ms,
            global_phase_ms,
            fuse_ms,
            total_ms: elapsed_ms(start),
            bucket_size_histogram: size_histogram(&sizes),
            bucket_sizes: sizes,
            isolated_nodes: draft.isolated().len(),
            cross_bucket_edge_ratio: fuse.cross_bucket_ratio(),
            fuse,
            global: stats,
        };
        Ok((index, report))
    }

    /// Build that stops after the local pass (no remote edges).
    pub fn build_local_only(records: &[VectorRecord], params: BuildParams) -> Result<Self> {
        let mut index = Self::from_records(records, params, None)?;
        let draft = index.build_local_phase();
        index.install_local_rows(&draft);
        Ok(index)
    }

    /// First construction pass over all published rows.
    pub fn build_local_phase(&self) -> LocalGraphDraft {
        build_local_phase(&self.store, &self.buckets, self.len(), self.params.k_max, self.params.k_local)
    }

    /// Global candidate graph over all published rows.
    pub fn build_global_graph(&self) -> Result<GlobalGraph> {
        Ok(build_global_graph(&self.store, self.len(), &self.params)?.0)
    }

    /// Second construction pass; overwrites every published row.
    pub fn fuse_remote_edges(&mut self, draft: &LocalGraphDraft, global: &GlobalGraph) -> Result<FuseStats> {
        if draft.len() != self.len() || global.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "draft covers {} nodes and global graph {}, index has {}",
                draft.len(),
                global.len(),
                self.len()
            )));
        }
        let config = FuseConfig {
            proximal_fraction: self.params.proximal_fraction,
            proximal_window: self.params.proximal_window,
        };
        Ok(fuse_remote_edges(draft, global, &self.store, &self.buckets, config, &mut self.graph))
    }

    fn install_local_rows(&mut self, draft: &LocalGraphDraft) -> FuseStats {
        let mut stats = FuseStats::default();
        for u in 0..draft.len() {
            let row = draft.merged(u as Slot);
            self.graph.set_row(u, row);
            stats.local_fallback_edges += row.len();
            stats.total_edges += row.len();
            stats.empty_slots += self.params.k_max - row.len();
        }
        stats
    }

    /// Appends records at the tail: claims slots, writes rows, leaves their
    /// adjacency empty and assigns them to buckets. No existing row moves.
    pub fn append_batch(&mut self, records: &[VectorRecord]) -> Result<Range<usize>> {
        let slots = self.store.append(records)?;
        for slot in slots.clone() {
            self.graph.set_row(slot, &[]);
            self.buckets.assign(slot as Slot, self.store.scalar(slot));
        }
        Ok(slots)
    }

    pub(crate) fn from_parts(
        store: VectorStore,
        graph: AdjacencyMatrix,
        buckets: BucketMeta,
        params: BuildParams,
    ) -> Self {
        Self {
            store,
            graph,
            buckets,
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn capacity(&self) -> usize {
        self.store.capacity()
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    pub fn graph(&self) -> &AdjacencyMatrix {
        &self.graph
    }

    pub fn buckets(&self) -> &BucketMeta {
        &self.buckets
    }

    pub fn vector(&self, slot: Slot) -> &[f32] {
        self.store.vector(slot as usize)
    }

    pub fn scalar(&self, slot: Slot) -> f32 {
        self.store.scalar(slot as usize)
    }

    pub fn external_id(&self, slot: Slot) -> u64 {
        self.store.id(slot as usize)
    }

    /// `[min, max]` over live scalars, or `None` when empty.
    pub fn scalar_span(&self) -> Option<RangePredicate> {
        let s = self.store.scalars();
        if s.is_empty() {
            return None;
        }
        let (lo, hi) = s
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(RangePredicate { lower: lo, upper: hi })
    }

    /// Checks adjacency and bucket-map invariants over all live rows.
    pub fn check(&self) -> Result<(), String> {
        self.graph.check(self.len())?;
        self.buckets.check(self.len())
    }
}
