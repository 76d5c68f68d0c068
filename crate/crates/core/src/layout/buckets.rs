use std::ops::RangeInclusive;

use crate::distance::Slot;
use crate::error::{Error, Result};
use crate::types::{PartitionStrategy, RangePredicate};

pub type BucketId = u32;

/// Logical scalar buckets over physical slots.
///
/// Bucket `i` covers `[boundaries[i], boundaries[i + 1])`; the last bucket is
/// closed. Scalars outside `[boundaries[0], boundaries[m]]` clamp to the first
/// or last bucket. The two maps keep slot → bucket and bucket → slots in sync;
/// slot lists are kept in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketMeta {
    boundaries: Vec<f32>,
    index_to_bucket: Vec<BucketId>,
    bucket_to_index: Vec<Vec<Slot>>,
}

impl BucketMeta {
    /// Empty metadata over the given boundaries (`m + 1` values).
    pub fn from_boundaries(boundaries: Vec<f32>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidParameter("need at least two bucket boundaries".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("bucket boundaries must be finite".into()));
        }
        let strictly_increasing = boundaries.windows(2).all(|w| w[0] < w[1]);
        let degenerate = boundaries.len() == 2 && boundaries[0] == boundaries[1];
        if !strictly_increasing && !degenerate {
            return Err(Error::InvalidParameter("bucket boundaries must be strictly increasing".into()));
        }
        let m = boundaries.len() - 1;
        Ok(Self {
            boundaries,
            index_to_bucket: Vec::new(),
            bucket_to_index: vec![Vec::new(); m],
        })
    }

    /// Partitions scalars of slots `0..n` into `ceil(n / target_capacity)`
    /// buckets and assigns every slot.
    ///
    /// With equal-frequency placement the inner boundaries sit at the sorted
    /// ranks `i * n / m`; repeated scalar values can merge buckets, and an
    /// all-equal column yields a single degenerate bucket.
    pub fn partition(scalars: &[f32], target_capacity: usize, strategy: PartitionStrategy) -> Result<Self> {
        if scalars.is_empty() {
            return Err(Error::InvalidParameter("cannot partition an empty scalar column".into()));
        }
        if target_capacity == 0 {
            return Err(Error::InvalidParameter("target bucket capacity must be positive".into()));
        }
        if let Some(bad) = scalars.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidRecord(format!("non-finite scalar {bad}")));
        }
        let n = scalars.len();
        let m = n.div_ceil(target_capacity);
        let mut sorted = scalars.to_vec();
        sorted.sort_by(f32::total_cmp);
        let (lo, hi) = (sorted[0], sorted[n - 1]);

        let mut boundaries = vec![lo];
        if lo < hi {
            for i in 1..m {
                let edge = match strategy {
                    PartitionStrategy::EqualFrequency => sorted[i * n / m],
                    PartitionStrategy::EqualWidth => lo + (hi - lo) * (i as f32 / m as f32),
                };
                if edge > *boundaries.last().unwrap() && edge < hi {
                    boundaries.push(edge);
                }
            }
        }
        boundaries.push(hi);

        let mut meta = Self::from_boundaries(boundaries)?;
        for (slot, &s) in scalars.iter().enumerate() {
            meta.assign(slot as Slot, s);
        }
        Ok(meta)
    }

    pub fn bucket_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f32] {
        &self.boundaries
    }

    /// Number of assigned slots.
    pub fn len(&self) -> usize {
        self.index_to_bucket.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_bucket.is_empty()
    }

    /// Binary search for the bucket holding scalar `s`, clamping at the ends.
    #[inline]
    pub fn bucket_of(&self, s: f32) -> BucketId {
        let m = self.bucket_count();
        let inner = &self.boundaries[1..m];
        inner.partition_point(|&edge| edge <= s) as BucketId
    }

    /// Contiguous bucket ids whose interval meets `range`; empty when no slot
    /// has been assigned yet.
    pub fn intersecting(&self, range: &RangePredicate) -> RangeInclusive<BucketId> {
        if self.is_empty() {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        self.bucket_of(range.lower)..=self.bucket_of(range.upper)
    }

    /// Records that `slot` (the next unassigned slot) holds scalar `s`.
    pub fn assign(&mut self, slot: Slot, s: f32) -> BucketId {
        debug_assert_eq!(slot as usize, self.index_to_bucket.len(), "slots are assigned in order");
        let b = self.bucket_of(s);
        self.index_to_bucket.push(b);
        self.bucket_to_index[b as usize].push(slot);
        b
    }

    #[inline]
    pub fn bucket_of_slot(&self, slot: Slot) -> BucketId {
        self.index_to_bucket[slot as usize]
    }

    pub fn members(&self, bucket: BucketId) -> &[Slot] {
        &self.bucket_to_index[bucket as usize]
    }

    pub fn index_to_bucket(&self) -> &[BucketId] {
        &self.index_to_bucket
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.bucket_to_index.iter().map(Vec::len).collect()
    }

    /// Rebuilds metadata from stored boundaries and a slot → bucket map.
    pub fn from_parts(boundaries: Vec<f32>, index_to_bucket: Vec<BucketId>) -> Result<Self> {
        let mut meta = Self::from_boundaries(boundaries)?;
        let m = meta.bucket_count();
        for (slot, &b) in index_to_bucket.iter().enumerate() {
            if b as usize >= m {
                return Err(Error::Format(format!("slot {slot} maps to bucket {b} of {m}")));
            }
            meta.bucket_to_index[b as usize].push(slot as Slot);
        }
        meta.index_to_bucket = index_to_bucket;
        Ok(meta)
    }

    /// Full scan of the two maps: every slot below `count` appears in exactly
    /// the bucket list its map entry names, and nowhere else.
    pub fn check(&self, count: usize) -> Result<(), String> {
        if self.index_to_bucket.len() != count {
            return Err(format!("{} slots mapped, expected {count}", self.index_to_bucket.len()));
        }
        let mut seen = vec![false; count];
        for (b, members) in self.bucket_to_index.iter().enumerate() {
            for &slot in members {
                let i = slot as usize;
                if i >= count {
                    return Err(format!("bucket {b} lists unpublished slot {slot}"));
                }
                if seen[i] {
                    return Err(format!("slot {slot} listed twice"));
                }
                seen[i] = true;
                if self.index_to_bucket[i] as usize != b {
                    return Err(format!("slot {slot} in bucket {b} but mapped to {}", self.index_to_bucket[i]));
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(format!("slot {i} missing from every bucket")),
            None => Ok(()),
        }
    }
}
