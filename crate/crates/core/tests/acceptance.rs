//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits nonzero if any fails.
//!
//! `BUCKETANN_ACCEPTANCE=1,4,9` restricts the run to the listed criteria.

use std::time::{Duration, Instant};

use bucketann::build::{build_global_graph, initial_graph, GlobalGraph, InitStrategy};
use bucketann::eval::{brute_force_batch, mean_recall, random_ranges, recall_at_k, scc_count, scc_count_with};
use bucketann::insert::{select_neighbors, try_rewire};
use bucketann::io::{gen_queries, gen_synthetic, Dataset, Distribution};
use bucketann::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

// Pinned workload and tolerances.
const N: usize = 50_000;
const DIM: usize = 64;
const DATA: Distribution = Distribution::LowRank { rank: 12, noise: 0.05 };
const DATA_SEED: u64 = 7;
const RANGE_SEED: u64 = 3;
const QUERIES: usize = 500;
const K: usize = 10;
const SELECTIVITIES: [f64; 4] = [0.01, 0.1, 0.2, 1.0];
const STATIC_BUCKET_CAP: usize = 500;
// Half the static capacity: the insert base holds half the data, so its
// buckets end up the same size as the static ones.
const INSERT_BASE_BUCKET_CAP: usize = 250;
const INSERT_BATCH: usize = 1_000;

const MIN_RECALL: f64 = 0.95;
const MAX_FULL_SCC: usize = 2;
const MAX_INSERT_SCC: usize = 25;
const INSERT_RECALL_GAP: f64 = 0.03;
const OVERLOCAL_GAP: f64 = 0.02;
const FUZZ_QUERIES: usize = 10_000;
const SCALING_RECALL_DROP: f64 = 0.05;

fn search_params(range: RangePredicate) -> SearchParams {
    SearchParams::new(K, range).with_itopk(128).with_width(4).with_max_iterations(50)
}

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

/// Per-query Recall@10 for each selectivity; query `i` runs on RNG stream `i`.
fn per_query_recall(index: &Index, queries: &[Vec<f32>], selectivities: &[f64]) -> Vec<Vec<f64>> {
    let span = index.scalar_span().expect("non-empty index");
    selectivities
        .iter()
        .map(|&sel| {
            let ranges = random_ranges(span, sel, queries.len(), RANGE_SEED);
            let truth = brute_force_batch(index.store(), queries, &ranges, K);
            let mut searcher = Searcher::new(index.capacity());
            queries
                .iter()
                .zip(&ranges)
                .zip(&truth)
                .enumerate()
                .map(|(i, ((q, r), t))| {
                    let found = searcher
                        .search_probed(index, q, &search_params(*r), i as u64, index.len(), &mut |_| {})
                        .expect("valid query")
                        .slots();
                    recall_at_k(&found, &t.slots(), K).value
                })
                .collect()
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn recall_by_selectivity(index: &Index, queries: &[Vec<f32>], selectivities: &[f64]) -> Vec<f64> {
    per_query_recall(index, queries, selectivities).iter().map(|r| mean(r)).collect()
}

/// Mean and standard error of the paired per-query difference `a - b`.
fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
    (m, (var / d.len() as f64).sqrt())
}

fn fmt_recalls(sels: &[f64], recalls: &[f64]) -> String {
    sels.iter()
        .zip(recalls)
        .map(|(s, r)| format!("{}%={r:.4}", s * 100.0))
        .collect::<Vec<_>>()
        .join(" ")
}

fn in_degree(index: &Index) -> Vec<usize> {
    let mut deg = vec![0; index.len()];
    for u in 0..index.len() {
        for v in index.graph().neighbors(u) {
            deg[v as usize] += 1;
        }
    }
    deg
}

fn criterion_1(report: &mut Report) {
    let t = Instant::now();
    let ds = gen_synthetic(2_000, 16, Distribution::Gaussian, 1);
    let queries = gen_queries(200, 16, Distribution::Gaussian, 1);
    let params = BuildParams {
        k_max: 32,
        bucket_capacity: 2_000,
        ..BuildParams::default()
    };
    let (index, _) = Index::build(&ds.records(), params).unwrap();
    let full = RangePredicate::unbounded();
    let p = SearchParams::new(K, full).with_itopk(256).with_max_iterations(100);
    let results: Vec<Vec<Slot>> = index.search_batch(&queries, &p).unwrap().iter().map(|r| r.slots()).collect();
    let truth = brute_force_batch(index.store(), &queries, &vec![full; queries.len()], K);
    let recall = mean_recall(&results, &truth, K);
    let elapsed = t.elapsed();
    let pass = index.buckets().bucket_count() == 1 && recall == 1.0 && elapsed < Duration::from_secs(30);
    report.record(1, "exact regime", pass, format!("recall={recall:.4} (need 1.0)"), elapsed);
}

struct StaticContext {
    data: Dataset,
    queries: Vec<Vec<f32>>,
    global: GlobalGraph,
    index: Index,
    recalls: Vec<f64>,
}

fn criterion_2(report: &mut Report) -> StaticContext {
    let t = Instant::now();
    let data = gen_synthetic(N, DIM, DATA, DATA_SEED);
    let queries = gen_queries(QUERIES, DIM, DATA, DATA_SEED);
    let params = BuildParams {
        bucket_capacity: STATIC_BUCKET_CAP,
        ..BuildParams::default()
    };
    let records = data.records();
    let staging = Index::from_records(&records, params.clone(), None).unwrap();
    let (global, _) = build_global_graph(staging.store(), N, &params).unwrap();
    drop(staging);
    let (index, _) = Index::build_with(&records, params, None, Some(&global)).unwrap();
    let recalls = recall_by_selectivity(&index, &queries, &SELECTIVITIES);
    let elapsed = t.elapsed();
    let pass = recalls.iter().all(|&r| r >= MIN_RECALL) && elapsed < Duration::from_secs(300);
    report.record(
        2,
        "recall at selectivity",
        pass,
        format!("{} (need >= {MIN_RECALL})", fmt_recalls(&SELECTIVITIES, &recalls)),
        elapsed,
    );
    StaticContext {
        data,
        queries,
        global,
        index,
        recalls,
    }
}

fn criterion_3(report: &mut Report, ctx: &StaticContext) {
    let t = Instant::now();
    let params = BuildParams {
        bucket_capacity: STATIC_BUCKET_CAP,
        ..BuildParams::default()
    };
    let records = ctx.data.records();
    let staging = Index::from_records(&records, params.clone(), None).unwrap();
    let (naive, _) = initial_graph(staging.store(), N, params.k_max, InitStrategy::Exact, &params);
    drop(staging);
    let naive_scc = scc_count_with(N, |u| naive[u].iter().map(|nb| nb.slot as usize));
    drop(naive);
    let local = Index::build_local_only(&records, params.clone()).unwrap();
    let local_scc = scc_count(local.graph(), N);
    drop(local);
    let full_scc = scc_count(ctx.index.graph(), N);
    let elapsed = t.elapsed();
    let pass = naive_scc > local_scc
        && local_scc > full_scc
        && full_scc <= MAX_FULL_SCC
        && elapsed < Duration::from_secs(120);
    report.record(
        3,
        "connectivity restoration",
        pass,
        format!("scc naive={naive_scc} local-only={local_scc} full={full_scc} (need strictly decreasing, full <= {MAX_FULL_SCC})"),
        elapsed,
    );
}

fn criterion_6(report: &mut Report, ctx: &StaticContext) {
    let t = Instant::now();
    let params = BuildParams {
        bucket_capacity: STATIC_BUCKET_CAP,
        k_local: 28,
        ..BuildParams::default()
    };
    let (index, _) = Index::build_with(&ctx.data.records(), params, None, Some(&ctx.global)).unwrap();
    let overlocal = recall_by_selectivity(&index, &ctx.queries, &[1.0])[0];
    let baseline = ctx.recalls[3];
    let pass = baseline - overlocal >= OVERLOCAL_GAP;
    report.record(
        6,
        "over-localization penalty",
        pass,
        format!("full-range recall k_local=16 {baseline:.4} vs k_local=28 {overlocal:.4} (need gap >= {OVERLOCAL_GAP})"),
        t.elapsed(),
    );
}

/// Builds on the first half, inserts the second half in batches.
fn insert_workload(data: &Dataset, alpha: f64) -> Index {
    let records = data.records();
    let params = BuildParams {
        bucket_capacity: INSERT_BASE_BUCKET_CAP,
        ..BuildParams::default()
    };
    let (mut index, _) = Index::build_with(&records[..N / 2], params, Some(N), None).unwrap();
    index.insert(&records[N / 2..], INSERT_BATCH, &InsertParams::with_alpha(alpha)).unwrap();
    index
}

fn criterion_4(report: &mut Report, ctx: &StaticContext) -> Vec<Vec<f64>> {
    let t = Instant::now();
    let index = insert_workload(&ctx.data, 0.6);
    let deg = in_degree(&index);
    let orphans = deg[N / 2..].iter().filter(|&&d| d == 0).count();
    let scc = scc_count(index.graph(), N);
    let per_query = per_query_recall(&index, &ctx.queries, &SELECTIVITIES);
    let recalls: Vec<f64> = per_query.iter().map(|r| mean(r)).collect();
    let gap = (recalls[1] - ctx.recalls[1]).abs();
    let elapsed = t.elapsed();
    let pass = orphans == 0 && scc <= MAX_INSERT_SCC && gap <= INSERT_RECALL_GAP && elapsed < Duration::from_secs(300);
    report.record(
        4,
        "dynamic-insert integrity",
        pass,
        format!(
            "inserted without in-edge={orphans} scc={scc} recall@10% insert={:.4} static={:.4} gap={gap:.4} (need 0, <= {MAX_INSERT_SCC}, <= {INSERT_RECALL_GAP})",
            recalls[1], ctx.recalls[1]
        ),
        elapsed,
    );
    per_query
}

fn criterion_5(report: &mut Report, ctx: &StaticContext, alpha_06: &[Vec<f64>]) {
    let t = Instant::now();
    let sels = [0.01, 0.2];
    let r06 = vec![alpha_06[0].clone(), alpha_06[2].clone()];
    let mut by_alpha = Vec::new();
    for alpha in [1.0, 0.4, 0.2] {
        let index = insert_workload(&ctx.data, alpha);
        by_alpha.push(per_query_recall(&index, &ctx.queries, &sels));
    }
    let (r10, r04, r02) = (&by_alpha[0], &by_alpha[1], &by_alpha[2]);
    let m = |r: &Vec<Vec<f64>>| r.iter().map(|q| mean(q)).collect::<Vec<f64>>();
    let (m06, m10, m04, m02) = (m(&r06), m(r10), m(r04), m(r02));
    let pass = (0..2).all(|i| m06[i] >= m10[i] && m06[i] >= m02[i] && m04[i] >= m02[i]);
    let paired: Vec<String> = (0..2)
        .map(|i| {
            let (d6, se6) = paired_difference(&r06[i], &r02[i]);
            let (d4, se4) = paired_difference(&r04[i], &r02[i]);
            format!(
                "{}%: 0.6-0.2={d6:+.4}±{se6:.4} 0.4-0.2={d4:+.4}±{se4:.4}",
                sels[i] * 100.0
            )
        })
        .collect();
    report.record(
        5,
        "freshness-bias ablation",
        pass,
        format!(
            "alpha=1.0 [{}] alpha=0.6 [{}] alpha=0.4 [{}] alpha=0.2 [{}]; paired diff ± s.e. [{}] (need 0.6 >= 1.0, 0.6 >= 0.2, 0.4 >= 0.2)",
            fmt_recalls(&sels, &m10),
            fmt_recalls(&sels, &m06),
            fmt_recalls(&sels, &m04),
            fmt_recalls(&sels, &m02),
            paired.join("; ")
        ),
        t.elapsed(),
    );
}

fn criterion_7(report: &mut Report) {
    let t = Instant::now();
    let params = BuildParams {
        k_max: 8,
        k_local: 4,
        bucket_capacity: 60,
        ..BuildParams::default()
    };
    let strategy = (
        0u64..10_000,
        proptest::collection::vec(0usize..80, 1..6),
        prop_oneof![Just(0.2), Just(0.6), Just(1.0)],
    );
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&strategy, |(seed, batches, alpha)| {
        let total = 240 + batches.iter().sum::<usize>();
        let all = gen_synthetic(total, 6, Distribution::Gaussian, seed).records();
        let (mut index, _) = Index::build_with(&all[..240], params.clone(), Some(total), None).unwrap();
        let mut start = 240;
        for &b in &batches {
            let vectors: Vec<u32> = index.store().raw_vectors().iter().map(|x| x.to_bits()).collect();
            let scalars: Vec<u32> = index.store().scalars().iter().map(|x| x.to_bits()).collect();
            let rows = index.graph().rows(start).to_vec();
            let rep = index.insert_batch(&all[start..start + b], &InsertParams::with_alpha(alpha)).unwrap();
            let now_v: Vec<u32> = index.store().raw_vectors()[..vectors.len()].iter().map(|x| x.to_bits()).collect();
            let now_s: Vec<u32> = index.store().scalars()[..scalars.len()].iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(now_v, vectors);
            prop_assert_eq!(now_s, scalars);
            for u in 0..start {
                if index.graph().row(u) != &rows[u * 8..(u + 1) * 8] {
                    prop_assert!(rep.rewired_rows.contains(&(u as Slot)), "row {} changed but not reported", u);
                }
            }
            start += b;
        }
        Ok(())
    });
    let detail = match &result {
        Ok(()) => "64 random insert sequences, old rows bitwise stable, edits confined to reported rows".to_owned(),
        Err(e) => format!("{e}"),
    };
    report.record(7, "append-only zero-shift", result.is_ok(), detail, t.elapsed());
}

fn criterion_8(report: &mut Report) {
    let t = Instant::now();
    fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
    }
    let origin = [0.0, 0.0];
    let geometries: [(&[[f64; 2]], [f64; 2]); 8] = [
        (&[[1.0, 0.0]], [1.05, 0.0]),
        (&[[1.0, 0.0]], [0.0, 1.0]),
        (&[[1.0, 0.0]], [2.0, 0.0]),
        (&[[1.0, 0.0]], [1.5, 1.0]),
        (&[[1.0, 0.0], [0.0, 1.0]], [1.2, 1.2]),
        (&[[1.0, 0.0], [0.0, 1.0]], [-1.5, 0.2]),
        (&[[0.5, 0.5]], [3.0, 3.0]),
        (&[[1.0, 1.0], [-1.0, 1.0]], [0.0, 2.5]),
    ];
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for (g, (kept, c)) in geometries.iter().enumerate() {
        for (fresh, alpha) in [(false, 1.0), (true, 0.2), (true, 0.6), (true, 1.0)] {
            cases += 1;
            // Direct evaluation on true (unsquared) distances.
            let dvc = d2(origin, *c).sqrt();
            let lhs = if fresh { alpha * dvc } else { dvc };
            let expect = kept.iter().all(|n| lhs < d2(*c, *n).sqrt());

            let mut pts: Vec<[f64; 2]> = kept.to_vec();
            pts.push(*c);
            let cand = kept.len() as Slot;
            let dist = |a: Slot, b: Slot| d2(pts[a as usize], pts[b as usize]);
            let mut list: Vec<Neighbor> = (0..cand).map(|s| Neighbor::new(s, 0.0)).collect();
            list.push(Neighbor::new(cand, d2(origin, *c)));
            let selected = select_neighbors(&list, 8, alpha, |s| fresh && s == cand, dist).len() == list.len();
            if selected != expect {
                mismatches.push(format!("select g{g} fresh={fresh} alpha={alpha}"));
            }
            if fresh {
                let mut row: Vec<Slot> = (0..cand).collect();
                let dv = |n: Slot| d2(origin, pts[n as usize]);
                let accepted = try_rewire(&mut row, cand, d2(origin, *c), alpha, 0, dv, |n| dist(cand, n)).accepted();
                if accepted != expect {
                    mismatches.push(format!("rewire g{g} alpha={alpha}"));
                }
            }
        }
    }
    let pass = cases >= 20 && mismatches.is_empty();
    report.record(
        8,
        "pruning rule semantics",
        pass,
        format!("{cases} cases, mismatches: {mismatches:?}"),
        t.elapsed(),
    );
}

fn criterion_9(report: &mut Report) {
    use rand::{Rng, SeedableRng};
    let t = Instant::now();
    let dist = Distribution::LowRank { rank: 8, noise: 0.05 };
    let ds = gen_synthetic(10_000, 16, dist, 17);
    let params = BuildParams {
        bucket_capacity: 500,
        ..BuildParams::default()
    };
    let (index, _) = Index::build(&ds.records(), params).unwrap();
    let queries = gen_queries(FUZZ_QUERIES, 16, dist, 17);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut searcher = Searcher::new(index.capacity());
    let (mut bad_results, mut bad_evals, mut returned, mut evals) = (0usize, 0usize, 0usize, 0usize);
    for (i, q) in queries.iter().enumerate() {
        let a: f32 = rng.random_range(-0.1..1.1);
        let b: f32 = rng.random_range(-0.1..1.1);
        let range = RangePredicate::new(a.min(b), a.max(b)).unwrap();
        let k = rng.random_range(1..=20);
        let p = SearchParams::new(k, range);
        let mut out_of_range = 0;
        let res = searcher
            .search_probed(&index, q, &p, i as u64, index.len(), &mut |s| {
                if !range.contains(index.scalar(s)) {
                    out_of_range += 1;
                }
            })
            .unwrap();
        bad_evals += out_of_range;
        evals += res.stats.distance_evals;
        returned += res.neighbors.len();
        bad_results += res.neighbors.iter().filter(|n| !range.contains(index.scalar(n.slot))).count();
    }
    let pass = bad_results == 0 && bad_evals == 0 && returned > 0;
    report.record(
        9,
        "range soundness",
        pass,
        format!("{FUZZ_QUERIES} queries, {returned} results, {evals} distance evals; out-of-range results={bad_results} evals={bad_evals}"),
        t.elapsed(),
    );
}

struct ScalePoint {
    build: f64,
    latency_us: f64,
    recalls: Vec<f64>,
}

// The first entry is the gated one; the filtered ones are reported only.
const SCALING_SELECTIVITIES: [f64; 3] = [1.0, 0.1, 0.01];

fn scale_point(n: usize) -> ScalePoint {
    let dist = Distribution::LowRank { rank: 8, noise: 0.05 };
    let ds = gen_synthetic(n, 16, dist, 11);
    let queries = gen_queries(300, 16, dist, 11);
    let params = BuildParams {
        bucket_capacity: 1_000,
        headroom: 1.0,
        ..BuildParams::default()
    };
    let t = Instant::now();
    let (index, _) = Index::build(&ds.records(), params).unwrap();
    let build = t.elapsed().as_secs_f64();
    drop(ds);
    let span = index.scalar_span().unwrap();
    let mut recalls = Vec::new();
    let mut latency_us = Vec::new();
    for &sel in &SCALING_SELECTIVITIES {
        let ranges = random_ranges(span, sel, queries.len(), RANGE_SEED);
        let truth = brute_force_batch(index.store(), &queries, &ranges, K);
        let mut searcher = Searcher::new(index.capacity());
        let t = Instant::now();
        let results: Vec<Vec<Slot>> = queries
            .iter()
            .zip(&ranges)
            .enumerate()
            .map(|(i, (q, r))| {
                searcher
                    .search_probed(&index, q, &search_params(*r), i as u64, index.len(), &mut |_| {})
                    .unwrap()
                    .slots()
            })
            .collect();
        latency_us.push(t.elapsed().as_secs_f64() * 1e6 / queries.len() as f64);
        recalls.push(mean_recall(&results, &truth, K));
    }
    ScalePoint {
        build,
        latency_us: latency_us[0],
        recalls,
    }
}

fn criterion_10(report: &mut Report) {
    let t = Instant::now();
    let small = scale_point(100_000);
    let large = scale_point(1_000_000);
    let build_ratio = large.build / small.build;
    let latency_ratio = large.latency_us / small.latency_us;
    let drop = small.recalls[0] - large.recalls[0];
    let elapsed = t.elapsed();
    let pass = build_ratio < 100.0
        && latency_ratio < 10.0
        && drop <= SCALING_RECALL_DROP
        && elapsed < Duration::from_secs(1_800);
    report.record(
        10,
        "scaling trend",
        pass,
        format!(
            "build {:.1}s -> {:.1}s (x{build_ratio:.1}, need < 100); full-range latency {:.0}us -> {:.0}us (x{latency_ratio:.2}, need < 10); recall 100k [{}] 1M [{}]; full-range drop {drop:.4} (need <= {SCALING_RECALL_DROP})",
            small.build,
            large.build,
            small.latency_us,
            large.latency_us,
            fmt_recalls(&SCALING_SELECTIVITIES, &small.recalls),
            fmt_recalls(&SCALING_SELECTIVITIES, &large.recalls),
        ),
        elapsed,
    );
}

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("BUCKETANN_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let want = |id: u32| selected.as_ref().is_none_or(|ids| ids.contains(&id));
    let mut report = Report { failed: 0 };

    if want(1) {
        criterion_1(&mut report);
    }
    if [2, 3, 4, 5, 6].iter().any(|&id| want(id)) {
        let ctx = criterion_2(&mut report);
        if want(3) {
            criterion_3(&mut report, &ctx);
        }
        if want(6) {
            criterion_6(&mut report, &ctx);
        }
        if want(4) || want(5) {
            let alpha_06 = criterion_4(&mut report, &ctx);
            if want(5) {
                criterion_5(&mut report, &ctx, &alpha_06);
            }
        }
    }
    if want(7) {
        criterion_7(&mut report);
    }
    if want(8) {
        criterion_8(&mut report);
    }
    if want(9) {
        criterion_9(&mut report);
    }
    if want(10) {
        criterion_10(&mut report);
    }

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
}
