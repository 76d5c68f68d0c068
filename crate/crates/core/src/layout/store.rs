use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::types::VectorRecord;

/// Append-only row storage for vectors, scalars and external ids.
///
/// All buffers are allocated for `capacity` rows up front. Rows `[0, len)`
/// are published and never rewritten. Writers first claim a contiguous slot
/// range through an atomic counter, fill it, then publish; readers only see
/// rows below the published length.
#[derive(Debug)]
pub struct VectorStore {
    dim: usize,
    capacity: usize,
    data: Vec<f32>,
    scalars: Vec<f32>,
    ids: Vec<u64>,
    claimed: AtomicUsize,
    written: usize,
    len: usize,
}

impl VectorStore {
    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if capacity >= u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "capacity {capacity} does not fit 32-bit slot indices"
            )));
        }
        Ok(Self {
            dim,
            capacity,
            data: vec![0.0; dim * capacity],
            scalars: vec![0.0; capacity],
            ids: vec![0; capacity],
            claimed: AtomicUsize::new(0),
            written: 0,
            len: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of published rows.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn vector(&self, slot: usize) -> &[f32] {
        &self.data[slot * self.dim..(slot + 1) * self.dim]
    }

    #[inline]
    pub fn scalar(&self, slot: usize) -> f32 {
        self.scalars[slot]
    }

    pub fn id(&self, slot: usize) -> u64 {
        self.ids[slot]
    }

    /// Scalars of all published rows.
    pub fn scalars(&self) -> &[f32] {
        &self.scalars[..self.len]
    }

    /// Feature rows of all published rows, row-major.
    pub fn raw_vectors(&self) -> &[f32] {
        &self.data[..self.len * self.dim]
    }

    /// Atomically reserves `count` contiguous slots at the tail.
    ///
    /// Concurrent callers receive pairwise-disjoint ranges. Fails without
    /// side effects when the remaining capacity is too small.
    pub fn claim(&self, count: usize) -> Result<Range<usize>> {
        let mut cur = self.claimed.load(Ordering::Relaxed);
        loop {
            let end = cur + count;
            if end > self.capacity {
                return Err(Error::CapacityExhausted {
                    requested: count,
                    available: self.capacity - cur,
                    capacity: self.capacity,
                });
            }
            match self
                .claimed
                .compare_exchange_weak(cur, end, Ordering::AcqRel, Ordering::Relaxed)
            {
                Ok(_) => return Ok(cur..end),
                Err(actual) => cur = actual,
            }
        }
    }

    /// Fills a previously claimed range. Records must already be validated.
    pub fn write_claimed(&mut self, slots: Range<usize>, records: &[VectorRecord]) -> Result<()> {
        let claimed = *self.claimed.get_mut();
        if slots.len() != records.len() || slots.start < self.len || slots.end > claimed {
            return Err(Error::InvalidParameter(format!(
                "slot range {slots:?} is not an unpublished claim"
            )));
        }
        for (slot, rec) in slots.zip(records) {
            rec.validate(self.dim)?;
            self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(&rec.vector);
            self.scalars[slot] = rec.scalar;
            self.ids[slot] = rec.id;
            self.written += 1;
        }
        Ok(())
    }

    /// Makes every claimed row visible once all of them have been written.
    /// Returns the published length.
    pub fn publish(&mut self) -> usize {
        let claimed = *self.claimed.get_mut();
        if self.len + self.written == claimed {
            self.len = claimed;
            self.written = 0;
        }
        self.len
    }

    /// Claim, write and publish in one step.
    pub fn append(&mut self, records: &[VectorRecord]) -> Result<Range<usize>> {
        for rec in records {
            rec.validate(self.dim)?;
        }
        let slots = self.claim(records.len())?;
        self.write_claimed(slots.clone(), records)?;
        self.publish();
        Ok(slots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, dim: usize) -> VectorRecord {
        VectorRecord::new(vec![i as f32; dim], i as f32 / 10.0, i as u64)
    }

    #[test]
    fn append_to_empty() {
        let mut s = VectorStore::with_capacity(3, 10).unwrap();
        let recs: Vec<_> = (0..5).map(|i| rec(i, 3)).collect();
        assert_eq!(s.append(&recs).unwrap(), 0..5);
        assert_eq!(s.len(), 5);
        assert_eq!(s.vector(4), &[4.0, 4.0, 4.0]);
        assert_eq!(s.scalar(2), 0.2);
    }

    #[test]
    fn empty_append_is_identity() {
        let mut s = VectorStore::with_capacity(2, 4).unwrap();
        s.append(&[rec(0, 2)]).unwrap();
        let r = s.append(&[]).unwrap();
        assert!(r.is_empty());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn capacity_error_leaves_state_untouched() {
        let mut s = VectorStore::with_capacity(2, 4).unwrap();
        s.append(&[rec(0, 2), rec(1, 2), rec(2, 2)]).unwrap();
        let err = s.append(&[rec(3, 2), rec(4, 2)]).unwrap_err();
        assert!(matches!(err, Error::CapacityExhausted { requested: 2, available: 1, capacity: 4 }));
        assert_eq!(s.len(), 3);
        assert_eq!(s.append(&[rec(3, 2)]).unwrap(), 3..4);
    }

    #[test]
    fn concurrent_claims_are_disjoint_and_contiguous() {
        for _ in 0..50 {
            let mut s = VectorStore::with_capacity(1, 64).unwrap();
            s.append(&[rec(0, 1), rec(1, 1)]).unwrap();
            let (a, b) = std::thread::scope(|scope| {
                let h1 = scope.spawn(|| s.claim(3).unwrap());
                let h2 = scope.spawn(|| s.claim(4).unwrap());
                (h1.join().unwrap(), h2.join().unwrap())
            });
            assert_eq!(a.len(), 3);
            assert_eq!(b.len(), 4);
            let (first, second) = if a.start < b.start { (&a, &b) } else { (&b, &a) };
            assert_eq!(first.start, 2);
            assert_eq!(first.end, second.start);
            assert_eq!(second.end, 9);

            // Nothing is visible until both claims are written.
            s.write_claimed(a.clone(), &(0..3).map(|i| rec(10 + i, 1)).collect::<Vec<_>>()).unwrap();
            assert_eq!(s.publish(), 2);
            s.write_claimed(b.clone(), &(0..4).map(|i| rec(20 + i, 1)).collect::<Vec<_>>()).unwrap();
            assert_eq!(s.publish(), 9);
        }
    }

    #[test]
    fn rejects_bad_records() {
        let mut s = VectorStore::with_capacity(2, 4).unwrap();
        assert!(s.append(&[VectorRecord::new(vec![1.0], 0.0, 0)]).is_err());
        assert!(s.append(&[VectorRecord::new(vec![1.0, 2.0], f32::INFINITY, 0)]).is_err());
        assert_eq!(s.len(), 0);
    }
}
