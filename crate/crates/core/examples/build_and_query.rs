//! Build an index over synthetic data and run one unfiltered query.

use bucketann::io::{gen_queries, gen_synthetic, Distribution};
use bucketann::{BuildParams, Index, RangePredicate, SearchParams};

fn main() -> bucketann::Result<()> {
    let dist = Distribution::Clustered { clusters: 32, spread: 0.3 };
    let data = gen_synthetic(20_000, 32, dist, 1);
    let params = BuildParams {
        bucket_capacity: 1_000,
        ..BuildParams::default()
    };
    let (index, report) = Index::build(&data.records(), params)?;
    println!(
        "built {} nodes in {} buckets, {:.0} ms (global phase {:.0} ms)",
        report.nodes, report.buckets, report.total_ms, report.global_phase_ms
    );

    let query = &gen_queries(1, 32, dist, 1)[0];
    let result = index.search(query, &SearchParams::new(5, RangePredicate::unbounded()))?;
    for (rank, nb) in result.neighbors.iter().enumerate() {
        println!(
            "#{rank} slot {:>5} id {:>5} dist {:.4} scalar {:.3}",
            nb.slot,
            index.external_id(nb.slot),
            nb.dist.sqrt(),
            index.scalar(nb.slot)
        );
    }
    println!("{} distance evaluations", result.stats.distance_evals);
    Ok(())
}
