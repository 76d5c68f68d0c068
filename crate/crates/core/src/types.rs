//! Records, predicates and parameter bundles shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One object to be indexed: an embedding, its scalar predicate value and an
/// opaque caller-side identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorRecord {
    pub vector: Vec<f32>,
    pub scalar: f32,
    pub id: u64,
}

impl VectorRecord {
    pub fn new(vector: Vec<f32>, scalar: f32, id: u64) -> Self {
        Self { vector, scalar, id }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if self.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.vector.len(),
            });
        }
        if !self.scalar.is_finite() {
            return Err(Error::InvalidRecord(format!(
                "record {} has non-finite scalar {}",
                self.id, self.scalar
            )));
        }
        Ok(())
    }
}

/// Closed scalar interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangePredicate {
    pub lower: f32,
    pub upper: f32,
}

impl RangePredicate {
    pub fn new(lower: f32, upper: f32) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::InvalidParameter(format!(
                "range [{lower}, {upper}] is not a valid interval"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// A range that admits every finite scalar.
    pub fn unbounded() -> Self {
        Self {
            lower: f32::NEG_INFINITY,
            upper: f32::INFINITY,
        }
    }

    #[inline]
    pub fn contains(&self, s: f32) -> bool {
        s >= self.lower && s <= self.upper
    }
}

/// How scalar bucket boundaries are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// Boundaries at empirical quantiles, so buckets hold equal node counts.
    #[default]
    EqualFrequency,
    /// Boundaries evenly spaced between the minimum and maximum scalar.
    EqualWidth,
}

/// Construction-time parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    /// Total out-degree of every node.
    pub k_max: usize,
    /// Leading slots reserved for intra-bucket edges.
    pub k_local: usize,
    /// Target number of nodes per bucket.
    pub bucket_capacity: usize,
    /// Share of the remote budget given to scalar-proximal candidates.
    pub proximal_fraction: f64,
    /// Scalar window, as a fraction of the scalar span, that makes a remote
    /// candidate proximal.
    pub proximal_window: f64,
    /// Freshness bias applied to newly inserted nodes during pruning.
    pub alpha: f64,
    pub rng_seed: u64,
    pub partition: PartitionStrategy,
    /// Degree of the global candidate graph; defaults to `k_max`.
    pub global_degree: Option<usize>,
    /// Neighbor-of-neighbor refinement rounds applied to the global graph.
    pub refine_rounds: usize,
    /// Largest dataset for which the global graph is initialized exactly.
    pub exact_init_limit: usize,
    /// Upper bound on descent rounds when the global graph starts random.
    pub descent_max_rounds: usize,
    /// Slot capacity as a multiple of the initial node count.
    pub headroom: f64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            k_max: 32,
            k_local: 16,
            bucket_capacity: 10_000,
            proximal_fraction: 0.5,
            proximal_window: 0.2,
            alpha: 0.6,
            rng_seed: 42,
            partition: PartitionStrategy::EqualFrequency,
            global_degree: None,
            refine_rounds: 3,
            exact_init_limit: 100_000,
            descent_max_rounds: 12,
            headroom: 2.0,
        }
    }
}

impl BuildParams {
    pub fn k_remote(&self) -> usize {
        self.k_max - self.k_local
    }

    pub fn global_degree(&self) -> usize {
        self.global_degree.unwrap_or(self.k_max)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k_local == 0 || self.k_local > self.k_max {
            return bad(format!(
                "need 0 < k_local <= k_max, got k_local={} k_max={}",
                self.k_local, self.k_max
            ));
        }
        if self.k_max >= u32::MAX as usize {
            return bad(format!("k_max {} too large", self.k_max));
        }
        if self.bucket_capacity == 0 {
            return bad("bucket_capacity must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.proximal_fraction) {
            return bad(format!("proximal_fraction {} outside [0, 1]", self.proximal_fraction));
        }
        if !(self.proximal_window > 0.0 && self.proximal_window <= 1.0) {
            return bad(format!("proximal_window {} outside (0, 1]", self.proximal_window));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if self.global_degree() == 0 {
            return bad("global_degree must be positive".into());
        }
        if !(self.headroom >= 1.0) {
            return bad(format!("headroom {} must be >= 1", self.headroom));
        }
        Ok(())
    }
}

/// Query-time parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub k: usize,
    pub range: RangePredicate,
    /// Capacity of the candidate queue.
    pub itopk: usize,
    /// Entries expanded per iteration.
    pub search_width: usize,
    pub max_iterations: usize,
    pub seed_count: usize,
    pub rng_seed: u64,
}

impl SearchParams {
    pub fn new(k: usize, range: RangePredicate) -> Self {
        let itopk = 128.max(k);
        Self {
            k,
            range,
            itopk,
            search_width: 4,
            max_iterations: 50,
            seed_count: itopk.min(32),
            rng_seed: 0,
        }
    }

    pub fn with_itopk(mut self, itopk: usize) -> Self {
        self.itopk = itopk;
        self.seed_count = itopk.min(32);
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.search_width = width;
        self
    }

    pub fn with_max_iterations(mut self, iters: usize) -> Self {
        self.max_iterations = iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_range(mut self, range: RangePredicate) -> Self {
        self.range = range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k == 0 || self.k > self.itopk {
            return bad(format!("need 0 < k <= itopk, got k={} itopk={}", self.k, self.itopk));
        }
        if self.search_width == 0 {
            return bad("search_width must be >= 1".into());
        }
        if self.seed_count == 0 {
            return bad("seed_count must be >= 1".into());
        }
        if self.range.lower.is_nan() || self.range.upper.is_nan() || self.range.lower > self.range.upper {
            return bad(format!("invalid range [{}, {}]", self.range.lower, self.range.upper));
        }
        Ok(())
    }
}
