//! Parameter sweeps: Cartesian products of build and search settings,
//! evaluated against exact ground truth at several range selectivities.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::{brute_force_batch, recall_at_k, GroundTruth, GroundTruthCache};
use super::scc::scc_count;
use crate::error::{Error, Result};
use crate::index::Index;
use crate::search::Searcher;
use crate::types::{RangePredicate, SearchParams};

/// `count` ranges of width `selectivity * span`, placed uniformly inside
/// the span.
pub fn random_ranges(span: RangePredicate, selectivity: f64, count: usize, seed: u64) -> Vec<RangePredicate> {
    let lo = span.lower as f64;
    let hi = span.upper as f64;
    let width = selectivity.clamp(0.0, 1.0) * (hi - lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            if selectivity >= 1.0 {
                return span;
            }
            let free = (hi - lo - width).max(0.0);
            let start = lo + rng.random::<f64>() * free;
            let lower = start as f32;
            let upper = ((start + width) as f32).min(span.upper);
            RangePredicate { lower, upper }
        })
        .collect()
}

/// Grid definition. Empty lists fall back to the defaults and are not
/// reported as swept columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub selectivities: Vec<f64>,
    pub k: usize,
    pub itopk: Vec<usize>,
    pub search_width: Vec<usize>,
    pub max_iterations: Vec<usize>,
    pub k_local: Vec<usize>,
    pub alpha: Vec<f64>,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            selectivities: vec![0.01, 0.1, 0.2, 1.0],
            k: 10,
            itopk: Vec::new(),
            search_width: Vec::new(),
            max_iterations: Vec::new(),
            k_local: Vec::new(),
            alpha: Vec::new(),
            seed: 1,
        }
    }
}

/// Build-time coordinates of one grid cell, handed to the index factory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BuildVariant {
    pub k_local: Option<usize>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalRow {
    pub selectivity: f64,
    pub k: usize,
    pub recall: f64,
    pub qps: f64,
    pub mean_latency_us: f64,
    pub p99_latency_us: f64,
    pub dist_evals_per_query: f64,
    pub scc: usize,
    pub itopk: usize,
    pub search_width: usize,
    pub max_iterations: usize,
    pub k_local: usize,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Names of parameters that were swept (extra CSV columns).
    pub swept: Vec<String>,
}

fn or_default<T: Copy>(v: &[T], d: T) -> Vec<T> {
    if v.is_empty() {
        vec![d]
    } else {
        v.to_vec()
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Evaluates every grid cell. `factory` is called once per distinct build
/// variant; search settings reuse the same index.
pub fn run_sweep(
    mut factory: impl FnMut(&BuildVariant) -> Result<Index>,
    queries: &[Vec<f32>],
    spec: &SweepSpec,
    cache: Option<&GroundTruthCache>,
) -> Result<EvalReport> {
    if spec.selectivities.is_empty() || spec.k == 0 {
        return Err(Error::InvalidParameter("sweep needs selectivities and k > 0".into()));
    }
    let defaults = SearchParams::new(spec.k, RangePredicate::unbounded());
    let k_locals: Vec<Option<usize>> = if spec.k_local.is_empty() {
        vec![None]
    } else {
        spec.k_local.iter().map(|&k| Some(k)).collect()
    };
    let alphas: Vec<Option<f64>> = if spec.alpha.is_empty() {
        vec![None]
    } else {
        spec.alpha.iter().map(|&a| Some(a)).collect()
    };
    let itopks = or_default(&spec.itopk, defaults.itopk);
    let widths = or_default(&spec.search_width, defaults.search_width);
    let iters = or_default(&spec.max_iterations, defaults.max_iterations);

    let mut swept = Vec::new();
    for (name, list_len) in [
        ("itopk", spec.itopk.len()),
        ("search_width", spec.search_width.len()),
        ("max_iterations", spec.max_iterations.len()),
        ("k_local", spec.k_local.len()),
        ("alpha", spec.alpha.len()),
    ] {
        if list_len > 0 {
            swept.push(name.to_string());
        }
    }

    let mut rows = Vec::new();
    for &k_local in &k_locals {
        for &alpha in &alphas {
            let variant = BuildVariant { k_local, alpha };
            let index = factory(&variant)?;
            let span = index
                .scalar_span()
                .ok_or_else(|| Error::InvalidParameter("sweep over an empty index".into()))?;
            let scc = scc_count(index.graph(), index.len());
            for (si, &sel) in spec.selectivities.iter().enumerate() {
                let ranges = random_ranges(span, sel, queries.len(), spec.seed.wrapping_add(si as u64));
                let truths: Vec<GroundTruth> = match cache {
                    Some(c) => c.get_or_compute(index.store(), queries, &ranges, spec.k)?,
                    None => brute_force_batch(index.store(), queries, &ranges, spec.k),
                };
                for &itopk in &itopks {
                    for &width in &widths {
                        for &max_iter in &iters {
                            let base = SearchParams {
                                k: spec.k,
                                range: span,
                                itopk,
                                search_width: width,
                                max_iterations: max_iter,
                                seed_count: itopk.min(32),
                                rng_seed: spec.seed,
                            };
                            rows.push(evaluate_cell(&index, queries, &ranges, &truths, &base, sel, scc, alpha)?);
                        }
                    }
                }
            }
        }
    }
    Ok(EvalReport { rows, swept })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    index: &Index,
    queries: &[Vec<f32>],
    ranges: &[RangePredicate],
    truths: &[GroundTruth],
    base: &SearchParams,
    selectivity: f64,
    scc: usize,
    alpha: Option<f64>,
) -> Result<EvalRow> {
    let mut searcher = Searcher::new(index.capacity());
    let mut latencies = Vec::with_capacity(queries.len());
    let mut recall_sum = 0.0;
    let mut evals = 0usize;
    for (i, ((q, r), t)) in queries.iter().zip(ranges).zip(truths).enumerate() {
        let params = base.clone().with_range(*r);
        let start = Instant::now();
        let res = searcher.search_probed(index, q, &params, i as u64, index.len(), &mut |_| {})?;
        latencies.push(start.elapsed().as_secs_f64() * 1e6);
        evals += res.stats.distance_evals;
        recall_sum += recall_at_k(&res.slots(), &t.slots(), base.k).value;
    }
    let n = queries.len().max(1) as f64;
    let total_us: f64 = latencies.iter().sum();
    latencies.sort_by(f64::total_cmp);
    Ok(EvalRow {
        selectivity,
        k: base.k,
        recall: recall_sum / n,
        qps: if total_us > 0.0 { queries.len() as f64 / (total_us * 1e-6) } else { 0.0 },
        mean_latency_us: total_us / n,
        p99_latency_us: percentile(&latencies, 0.99),
        dist_evals_per_query: evals as f64 / n,
        scc,
        itopk: base.itopk,
        search_width: base.search_width,
        max_iterations: base.max_iterations,
        k_local: index.params().k_local,
        alpha,
    })
}

impl EvalReport {
    /// CSV with the fixed columns followed by one column per swept parameter.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = vec![
            "selectivity",
            "k",
            "recall",
            "qps",
            "mean_latency_us",
            "p99_latency_us",
            "dist_evals_per_query",
            "scc",
        ];
        header.extend(self.swept.iter().map(String::as_str));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.selectivity.to_string(),
                r.k.to_string(),
                format!("{:.6}", r.recall),
                format!("{:.1}", r.qps),
                format!("{:.2}", r.mean_latency_us),
                format!("{:.2}", r.p99_latency_us),
                format!("{:.2}", r.dist_evals_per_query),
                r.scc.to_string(),
            ];
            for name in &self.swept {
                rec.push(match name.as_str() {
                    "itopk" => r.itopk.to_string(),
                    "search_width" => r.search_width.to_string(),
                    "max_iterations" => r.max_iterations.to_string(),
                    "k_local" => r.k_local.to_string(),
                    "alpha" => r.alpha.map(|a| a.to_string()).unwrap_or_default(),
                    _ => String::new(),
                });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
