//! Squared Euclidean distance and the `(distance, slot)` ordering used
//! everywhere a neighbor list is ranked.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Physical row index into the global feature and adjacency matrices.
pub type Slot = u32;

const LANES: usize = 8;

/// Squared Euclidean distance between two equal-length vectors.
///
/// Components are widened to `f64` before subtraction. Partial sums are kept
/// in eight lanes (lane `j` owns coordinates `j, j + 8, ...`) and folded in a
/// fixed order, so the result is bitwise identical for `(a, b)` and `(b, a)`
/// and reproducible across runs.
///
/// Panics if the lengths differ; see [`try_squared_l2`] for the checked form.
#[inline]
pub fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len(), "distance between vectors of different dimension");
    let mut acc = [0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for j in 0..LANES {
            let d = x[j] as f64 - y[j] as f64;
            acc[j] += d * d;
        }
    }
    for (j, (x, y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        let d = *x as f64 - *y as f64;
        acc[j] += d * d;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Checked variant of [`squared_l2`].
pub fn try_squared_l2(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(squared_l2(a, b))
}

/// A candidate neighbor: slot plus its squared distance to some anchor.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Neighbor {
    pub slot: Slot,
    pub dist: f64,
}

impl Neighbor {
    pub fn new(slot: Slot, dist: f64) -> Self {
        Self { slot, dist }
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ascending distance, ties broken by the lower slot.
impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.slot.cmp(&other.slot))
    }
}
