//! Exact range-filtered ground truth and Recall@k.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::distance::{squared_l2, Neighbor, Slot};
use crate::error::{Error, Result};
use crate::layout::VectorStore;
use crate::types::RangePredicate;

/// Exact top-k for one query under its range.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Ascending by `(dist, slot)`; every entry satisfies the range.
    pub neighbors: Vec<Neighbor>,
    /// False when fewer than `k` live rows satisfy the range.
    pub complete: bool,
}

impl GroundTruth {
    pub fn slots(&self) -> Vec<Slot> {
        self.neighbors.iter().map(|n| n.slot).collect()
    }
}

/// Linear scan over all live rows: range filter, then exact top-k.
pub fn brute_force_search(store: &VectorStore, query: &[f32], k: usize, range: &RangePredicate) -> GroundTruth {
    let mut hits: Vec<Neighbor> = (0..store.len())
        .filter(|&i| range.contains(store.scalar(i)))
        .map(|i| Neighbor::new(i as Slot, squared_l2(query, store.vector(i))))
        .collect();
    let complete = hits.len() >= k;
    if hits.len() > k && k > 0 {
        hits.select_nth_unstable(k - 1);
        hits.truncate(k);
    }
    hits.sort_unstable();
    hits.truncate(k);
    GroundTruth { neighbors: hits, complete }
}

/// Ground truth for many queries, in parallel.
pub fn brute_force_batch(
    store: &VectorStore,
    queries: &[Vec<f32>],
    ranges: &[RangePredicate],
    k: usize,
) -> Vec<GroundTruth> {
    queries
        .par_iter()
        .zip(ranges.par_iter())
        .map(|(q, r)| brute_force_search(store, q, k, r))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Recall {
    pub value: f64,
    /// Set when the truth list was shorter than `k` and the denominator was
    /// reduced to its length.
    pub short_truth: bool,
}

/// `|result ∩ truth| / k`, both sides cut to their first `k` entries.
pub fn recall_at_k(result: &[Slot], truth: &[Slot], k: usize) -> Recall {
    let truth = &truth[..truth.len().min(k)];
    let result = &result[..result.len().min(k)];
    let short_truth = truth.len() < k;
    if truth.is_empty() {
        return Recall {
            value: 1.0,
            short_truth,
        };
    }
    let hits = result.iter().filter(|s| truth.contains(s)).count();
    Recall {
        value: hits as f64 / truth.len() as f64,
        short_truth,
    }
}

/// Mean Recall@k over paired results and truths.
pub fn mean_recall(results: &[Vec<Slot>], truths: &[GroundTruth], k: usize) -> f64 {
    assert_eq!(results.len(), truths.len());
    if results.is_empty() {
        return 1.0;
    }
    let sum: f64 = results
        .iter()
        .zip(truths)
        .map(|(r, t)| recall_at_k(r, &t.slots(), k).value)
        .sum();
    sum / results.len() as f64
}

const CACHE_MAGIC: &[u8; 4] = b"GTC1";

/// On-disk ground-truth cache keyed by a digest of the dataset, queries,
/// ranges and `k`.
///
/// File layout (little-endian): magic `GTC1`, `u32` query count, `u32` k,
/// then per query a `u32` length followed by that many `u32` slots.
/// Distances are recomputed on load.
#[derive(Clone, Debug)]
pub struct GroundTruthCache {
    dir: PathBuf,
}

impl GroundTruthCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(store: &VectorStore, queries: &[Vec<f32>], ranges: &[RangePredicate], k: usize) -> String {
        let mut h = Sha256::new();
        h.update((store.len() as u64).to_le_bytes());
        h.update((store.dim() as u64).to_le_bytes());
        for v in store.raw_vectors() {
            h.update(v.to_le_bytes());
        }
        for s in store.scalars() {
            h.update(s.to_le_bytes());
        }
        for (q, r) in queries.iter().zip(ranges) {
            for v in q {
                h.update(v.to_le_bytes());
            }
            h.update(r.lower.to_le_bytes());
            h.update(r.upper.to_le_bytes());
        }
        h.update((k as u64).to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.gt"))
    }

    /// Cached truths if present, otherwise computes and stores them.
    pub fn get_or_compute(
        &self,
        store: &VectorStore,
        queries: &[Vec<f32>],
        ranges: &[RangePredicate],
        k: usize,
    ) -> Result<Vec<GroundTruth>> {
        let key = Self::key(store, queries, ranges, k);
        let path = self.path(&key);
        if path.exists() {
            let slots = read_cache(&path)?;
            if slots.len() == queries.len() {
                return Ok(slots
                    .into_iter()
                    .zip(queries)
                    .map(|(list, q)| GroundTruth {
                        complete: list.len() >= k,
                        neighbors: list
                            .into_iter()
                            .map(|s| Neighbor::new(s, squared_l2(q, store.vector(s as usize))))
                            .collect(),
                    })
                    .collect());
            }
        }
        let truths = brute_force_batch(store, queries, ranges, k);
        fs::create_dir_all(&self.dir)?;
        write_cache(&path, &truths, k)?;
        Ok(truths)
    }
}

pub fn write_cache(path: &Path, truths: &[GroundTruth], k: usize) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(truths.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(k as u32).to_le_bytes());
    for t in truths {
        buf.extend_from_slice(&(t.neighbors.len() as u32).to_le_bytes());
        for n in &t.neighbors {
            buf.extend_from_slice(&n.slot.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<Vec<Vec<Slot>>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let u32_at = |pos: &mut usize| -> Result<u32> {
        let b = bytes.get(*pos..*pos + 4).ok_or(Error::Parse {
            offset: *pos as u64,
            message: "truncated ground-truth cache".into(),
        })?;
        *pos += 4;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    };
    if bytes.get(..4) != Some(CACHE_MAGIC) {
        return Err(Error::Parse {
            offset: 0,
            message: "bad ground-truth cache magic".into(),
        });
    }
    pos += 4;
    let count = u32_at(&mut pos)? as usize;
    let _k = u32_at(&mut pos)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u32_at(&mut pos)? as usize;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            list.push(u32_at(&mut pos)?);
        }
        out.push(list);
    }
    Ok(out)
}
