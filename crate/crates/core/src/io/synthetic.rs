use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::types::VectorRecord;

/// Vector distribution for generated datasets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Standard Gaussian coordinates.
    Gaussian,
    /// Mixture of `clusters` Gaussian blobs with unit-variance centers and
    /// per-coordinate standard deviation `spread`.
    Clustered { clusters: usize, spread: f32 },
    /// Gaussian latent vectors of dimension `rank` mapped through a fixed
    /// random `d x rank` matrix (entries N(0, 1/rank)), plus isotropic noise
    /// of standard deviation `noise`. Intrinsic dimension is about `rank`.
    LowRank { rank: usize, noise: f32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub vectors: Vec<Vec<f32>>,
    pub scalars: Vec<f32>,
}

impl Dataset {
    /// Records with id = position.
    pub fn records(&self) -> Vec<VectorRecord> {
        self.vectors
            .iter()
            .zip(&self.scalars)
            .enumerate()
            .map(|(i, (v, &s))| VectorRecord::new(v.clone(), s, i as u64))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// `n` vectors in `d` dimensions with scalars uniform on [0, 1].
pub fn gen_synthetic(n: usize, d: usize, distribution: Distribution, seed: u64) -> Dataset {
    sample(n, d, distribution, seed, 0)
}

/// Query vectors from the same distribution (same cluster centers) as
/// `gen_synthetic` with this seed, but an independent sample stream.
pub fn gen_queries(n: usize, d: usize, distribution: Distribution, seed: u64) -> Vec<Vec<f32>> {
    sample(n, d, distribution, seed, 1).vectors
}

fn gauss(rng: &mut ChaCha8Rng) -> f32 {
    StandardNormal.sample(rng)
}

fn sample(n: usize, d: usize, distribution: Distribution, seed: u64, stream: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let vectors = match distribution {
        Distribution::Gaussian => (0..n).map(|_| (0..d).map(|_| gauss(&mut rng)).collect()).collect(),
        Distribution::Clustered { clusters, spread } => {
            let mut crng = ChaCha8Rng::seed_from_u64(seed);
            crng.set_stream(u64::MAX);
            let centers: Vec<Vec<f32>> = (0..clusters.max(1))
                .map(|_| (0..d).map(|_| gauss(&mut crng)).collect())
                .collect();
            (0..n)
                .map(|_| {
                    let c = &centers[rng.random_range(0..centers.len())];
                    c.iter().map(|&x| x + spread * gauss(&mut rng)).collect()
                })
                .collect()
        }
        Distribution::LowRank { rank, noise } => {
            let rank = rank.max(1);
            let mut mrng = ChaCha8Rng::seed_from_u64(seed);
            mrng.set_stream(u64::MAX);
            let scale = 1.0 / (rank as f32).sqrt();
            let basis: Vec<f32> = (0..d * rank).map(|_| gauss(&mut mrng) * scale).collect();
            (0..n)
                .map(|_| {
                    let z: Vec<f32> = (0..rank).map(|_| gauss(&mut rng)).collect();
                    basis
                        .chunks_exact(rank)
                        .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f32>() + noise * gauss(&mut rng))
                        .collect()
                })
                .collect()
        }
    };
    let scalars = (0..n).map(|_| rng.random::<f32>()).collect();
    Dataset { vectors, scalars }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = gen_synthetic(100, 8, Distribution::Gaussian, 7);
        let b = gen_synthetic(100, 8, Distribution::Gaussian, 7);
        assert_eq!(a, b);
        let c = gen_synthetic(100, 8, Distribution::Gaussian, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn scalar_histogram_is_flat() {
        let ds = gen_synthetic(100_000, 1, Distribution::Gaussian, 11);
        let mut bins = [0usize; 10];
        for &s in &ds.scalars {
            assert!((0.0..=1.0).contains(&s));
            bins[((s * 10.0) as usize).min(9)] += 1;
        }
        for b in bins {
            let frac = b as f64 / 100_000.0;
            assert!((frac - 0.1).abs() <= 0.01, "{bins:?}");
        }
    }

    #[test]
    fn one_dimension() {
        let ds = gen_synthetic(10, 1, Distribution::Clustered { clusters: 3, spread: 0.1 }, 1);
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.dim(), 1);
        assert!(ds.vectors.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn queries_differ_from_data() {
        let dist = Distribution::Clustered { clusters: 4, spread: 0.05 };
        let ds = gen_synthetic(50, 4, dist, 3);
        let qs = gen_queries(50, 4, dist, 3);
        assert_ne!(ds.vectors, qs);
        // same mixture: every query sits near some data point
        for q in &qs {
            let best = ds
                .vectors
                .iter()
                .map(|v| crate::distance::squared_l2(q, v))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1.0);
        }
    }
}
