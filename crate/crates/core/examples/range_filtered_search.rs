//! Range-filtered queries at several selectivities, checked against brute force.

use bucketann::eval::{brute_force_search, recall_at_k};
use bucketann::io::{gen_queries, gen_synthetic, Distribution};
use bucketann::{BuildParams, Index, RangePredicate, SearchParams};

fn main() -> bucketann::Result<()> {
    let dist = Distribution::LowRank { rank: 12, noise: 0.05 };
    let data = gen_synthetic(20_000, 48, dist, 3);
    let (index, _) = Index::build(
        &data.records(),
        BuildParams {
            bucket_capacity: 500,
            ..BuildParams::default()
        },
    )?;
    let queries = gen_queries(50, 48, dist, 3);

    for (lower, upper) in [(0.40, 0.41), (0.25, 0.35), (0.0, 0.5), (0.0, 1.0)] {
        let range = RangePredicate::new(lower, upper)?;
        let params = SearchParams::new(10, range).with_itopk(128);
        let results = index.search_batch(&queries, &params)?;
        let mut hit = 0.0;
        let mut evals = 0;
        for (q, res) in queries.iter().zip(&results) {
            assert!(res.neighbors.iter().all(|n| range.contains(index.scalar(n.slot))));
            let truth = brute_force_search(index.store(), q, 10, &range);
            hit += recall_at_k(&res.slots(), &truth.slots(), 10).value;
            evals += res.stats.distance_evals;
        }
        println!(
            "range [{lower:.2}, {upper:.2}]: recall@10 {:.3}, {:.0} distance evals/query",
            hit / queries.len() as f64,
            evals as f64 / queries.len() as f64
        );
    }
    Ok(())
}
