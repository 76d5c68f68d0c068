//! Strongly connected components of the graph after each construction stage.

use bucketann::build::{initial_graph, InitStrategy};
use bucketann::eval::{scc_count, scc_count_with};
use bucketann::io::{gen_synthetic, Distribution};
use bucketann::{BuildParams, Index};

fn main() -> bucketann::Result<()> {
    let n = 10_000;
    let data = gen_synthetic(n, 32, Distribution::LowRank { rank: 12, noise: 0.05 }, 9);
    let records = data.records();
    let params = BuildParams {
        bucket_capacity: 500,
        ..BuildParams::default()
    };

    let staging = Index::from_records(&records, params.clone(), None)?;
    let (knn, _) = initial_graph(staging.store(), n, params.k_max, InitStrategy::Exact, &params);
    println!("plain {}-NN graph: {} components", params.k_max, scc_count_with(n, |u| knn[u].iter().map(|nb| nb.slot as usize)));

    let local = Index::build_local_only(&records, params.clone())?;
    println!("intra-bucket edges only: {} components", scc_count(local.graph(), n));

    let (full, report) = Index::build(&records, params)?;
    println!(
        "full build: {} components, {:.1}% cross-bucket edges, {} in-edges repaired",
        scc_count(full.graph(), n),
        100.0 * report.cross_bucket_edge_ratio,
        report.fuse.repaired_in_edges
    );
    Ok(())
}
