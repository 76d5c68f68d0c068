//! Build on half the data, stream the rest in batches, and compare with a
//! static build of everything.

use bucketann::eval::{brute_force_batch, mean_recall, random_ranges};
use bucketann::io::{gen_queries, gen_synthetic, Distribution};
use bucketann::{BuildParams, Index, InsertParams, InsertReport, SearchParams, Slot};

fn recall(index: &Index, queries: &[Vec<f32>], selectivity: f64) -> f64 {
    let ranges = random_ranges(index.scalar_span().unwrap(), selectivity, queries.len(), 1);
    let truth = brute_force_batch(index.store(), queries, &ranges, 10);
    let found: Vec<Vec<Slot>> = queries
        .iter()
        .zip(&ranges)
        .map(|(q, r)| index.search(q, &SearchParams::new(10, *r)).unwrap().slots())
        .collect();
    mean_recall(&found, &truth, 10)
}

fn main() -> bucketann::Result<()> {
    let dist = Distribution::LowRank { rank: 12, noise: 0.05 };
    let n = 20_000;
    let records = gen_synthetic(n, 48, dist, 5).records();
    let queries = gen_queries(200, 48, dist, 5);

    let params = BuildParams {
        bucket_capacity: 250,
        ..BuildParams::default()
    };
    let (mut index, _) = Index::build_with(&records[..n / 2], params, Some(n), None)?;
    let reports = index.insert(&records[n / 2..], 1_000, &InsertParams::with_alpha(0.6))?;
    let total = InsertReport::total(reports);
    println!(
        "inserted {} in {:.0} ms: {} reverse edges accepted, {} rejected, {} old rows rewired",
        total.batch_size,
        total.wall_ms,
        total.reverse_accepted,
        total.reverse_rejected,
        total.rewired_rows.len()
    );

    let (full, _) = Index::build(
        &records,
        BuildParams {
            bucket_capacity: 500,
            ..BuildParams::default()
        },
    )?;
    for sel in [0.01, 0.1, 1.0] {
        println!(
            "selectivity {sel}: inserted {:.3} static {:.3}",
            recall(&index, &queries, sel),
            recall(&full, &queries, sel)
        );
    }
    Ok(())
}
