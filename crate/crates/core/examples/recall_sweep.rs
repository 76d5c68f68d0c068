//! Parameter sweep over selectivity and queue width, written as CSV.

use bucketann::eval::{run_sweep, SweepSpec};
use bucketann::io::{gen_queries, gen_synthetic, Distribution};
use bucketann::{BuildParams, Index};

fn main() -> bucketann::Result<()> {
    let dist = Distribution::LowRank { rank: 12, noise: 0.05 };
    let records = gen_synthetic(20_000, 32, dist, 2).records();
    let queries = gen_queries(200, 32, dist, 2);
    let spec = SweepSpec {
        itopk: vec![32, 64, 128],
        ..SweepSpec::default()
    };
    let report = run_sweep(
        |variant| {
            let params = BuildParams {
                bucket_capacity: 500,
                k_local: variant.k_local.unwrap_or(16),
                ..BuildParams::default()
            };
            Ok(Index::build(&records, params)?.0)
        },
        &queries,
        &spec,
        None,
    )?;
    report.write_csv(std::io::stdout().lock())
}
