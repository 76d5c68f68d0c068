//! Command-line front end. `main_with_args` is what the binary calls; it
//! never panics on bad input and reports failures as one JSON line on
//! stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::eval::{run_sweep, scc_count, GroundTruthCache, SweepSpec};
use crate::index::Index;
use crate::insert::{InsertParams, InsertReport};
use crate::io::{
    gen_queries, gen_synthetic, load_index, read_fvecs, read_scalars, save_index, write_fvecs, write_scalars,
    Distribution,
};
use crate::types::{BuildParams, PartitionStrategy, RangePredicate, SearchParams, VectorRecord};

#[derive(Parser, Debug)]
#[command(name = "bucketann", version, about = "Range-filtered ANN index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset (fvecs + scalar sidecar).
    Gen(GenArgs),
    /// Build an index from vectors and scalars.
    Build(BuildArgs),
    /// Insert records into an existing index.
    Insert(InsertArgs),
    /// Run range-filtered queries.
    Query(QueryArgs),
    /// Recall/throughput sweep across selectivities and parameters.
    Bench(BenchArgs),
    /// Structural statistics of an index.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistArg {
    Gaussian,
    Clustered,
    LowRank,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    #[arg(long, default_value_t = 64)]
    clusters: usize,
    #[arg(long, default_value_t = 0.3)]
    spread: f32,
    /// Latent dimension of `low-rank` data.
    #[arg(long, default_value_t = 12)]
    rank: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output vectors (.fvecs).
    #[arg(long)]
    data: PathBuf,
    /// Output scalar sidecar.
    #[arg(long)]
    scalars: PathBuf,
    /// Also write this many query vectors from the same distribution.
    #[arg(long, requires = "queries_out")]
    queries: Option<usize>,
    #[arg(long)]
    queries_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartitionArg {
    EqualFrequency,
    EqualWidth,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    scalars: PathBuf,
    #[arg(long, default_value_t = 32)]
    kmax: usize,
    #[arg(long, default_value_t = 16)]
    klocal: usize,
    #[arg(long, default_value_t = 10_000)]
    bucket_cap: usize,
    #[arg(long, default_value_t = 0.5)]
    proximal_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    proximal_window: f64,
    #[arg(long, value_enum, default_value = "equal-frequency")]
    partition: PartitionArg,
    /// Capacity as a multiple of the initial record count.
    #[arg(long, default_value_t = 2.0)]
    headroom: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InsertArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    scalars: PathBuf,
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Where to write the updated index; defaults to overwriting `--index`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Inclusive scalar range `l,u`.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, default_value_t = 128)]
    itopk: usize,
    #[arg(long, default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Query vectors; when absent, `--query-count` stored vectors are used.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    query_count: usize,
    #[arg(long, value_delimiter = ',')]
    selectivities: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// JSON grid of parameter lists (itopk, search_width, max_iterations,
    /// k_local, alpha, selectivities, k, seed).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Ground-truth cache directory.
    #[arg(long)]
    gt_cache: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Bucket capacity used when a grid cell needs a rebuild.
    #[arg(long, default_value_t = 10_000)]
    bucket_cap: usize,
    /// Insert batch size used by alpha cells.
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    index: PathBuf,
    /// Print only the strongly connected component count.
    #[arg(long)]
    scc: bool,
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

/// Parses `args` (including the program name), runs the command with
/// output to stdout, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Build(a) => build(a, out),
        Command::Insert(a) => insert(a, out),
        Command::Query(a) => query(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Analyze(a) => analyze(a, out),
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    if a.n == 0 || a.d == 0 {
        return Err(Error::InvalidParameter("n and d must be at least 1".into()));
    }
    let dist = match a.dist {
        DistArg::Gaussian => Distribution::Gaussian,
        DistArg::Clustered => Distribution::Clustered {
            clusters: a.clusters,
            spread: a.spread,
        },
        DistArg::LowRank => Distribution::LowRank {
            rank: a.rank,
            noise: a.noise,
        },
    };
    let ds = gen_synthetic(a.n, a.d, dist, a.seed);
    write_fvecs(&a.data, &ds.vectors)?;
    write_scalars(&a.scalars, &ds.scalars)?;
    if let (Some(nq), Some(path)) = (a.queries, &a.queries_out) {
        write_fvecs(path, &gen_queries(nq, a.d, dist, a.seed))?;
    }
    writeln!(out, "{}", json!({ "n": a.n, "d": a.d, "seed": a.seed }))?;
    Ok(())
}

fn load_records(data: &PathBuf, scalars: &PathBuf, first_id: u64) -> Result<Vec<VectorRecord>> {
    let vectors = read_fvecs(data)?;
    let scalars = read_scalars(scalars)?;
    if vectors.len() != scalars.len() {
        return Err(Error::InvalidRecord(format!(
            "{} vectors but {} scalars",
            vectors.len(),
            scalars.len()
        )));
    }
    Ok(vectors
        .into_iter()
        .zip(scalars)
        .enumerate()
        .map(|(i, (v, s))| VectorRecord::new(v, s, first_id + i as u64))
        .collect())
}

fn build(a: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let records = load_records(&a.data, &a.scalars, 0)?;
    let params = BuildParams {
        k_max: a.kmax,
        k_local: a.klocal,
        bucket_capacity: a.bucket_cap,
        proximal_fraction: a.proximal_frac,
        proximal_window: a.proximal_window,
        partition: match a.partition {
            PartitionArg::EqualFrequency => PartitionStrategy::EqualFrequency,
            PartitionArg::EqualWidth => PartitionStrategy::EqualWidth,
        },
        headroom: a.headroom,
        rng_seed: a.seed,
        ..BuildParams::default()
    };
    let (index, report) = Index::build(&records, params)?;
    save_index(&index, &a.out)?;
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    Ok(())
}

fn insert(a: InsertArgs, out: &mut dyn Write) -> Result<()> {
    let mut index = load_index(&a.index)?;
    let records = load_records(&a.data, &a.scalars, index.len() as u64)?;
    let params = InsertParams::with_alpha(a.alpha);
    let reports = index.insert(&records, a.batch_size, &params)?;
    save_index(&index, a.out.as_ref().unwrap_or(&a.index))?;
    let batches = reports.len();
    let total = InsertReport::total(reports);
    writeln!(
        out,
        "{}",
        json!({
            "batches": batches,
            "inserted": total.batch_size,
            "nodes": index.len(),
            "capacity": index.capacity(),
            "forward_accepted": total.forward_accepted,
            "reverse_accepted": total.reverse_accepted,
            "reverse_rejected": total.reverse_rejected,
            "evictions_necessary": total.evictions_necessary,
            "evictions_redundant": total.evictions_redundant,
            "forced_links": total.forced_links,
            "rewired_rows": total.rewired_rows.len(),
            "wall_ms": total.wall_ms,
        })
    )?;
    Ok(())
}

fn parse_range(s: &str) -> Result<RangePredicate> {
    let bad = || Error::InvalidParameter(format!("range must be `l,u`, got `{s}`"));
    let (l, u) = s.split_once(',').ok_or_else(bad)?;
    let l: f32 = l.trim().parse().map_err(|_| bad())?;
    let u: f32 = u.trim().parse().map_err(|_| bad())?;
    RangePredicate::new(l, u)
}

fn query(a: QueryArgs, out: &mut dyn Write) -> Result<()> {
    let index = load_index(&a.index)?;
    let queries = read_fvecs(&a.queries)?;
    let range = match &a.range {
        Some(r) => parse_range(r)?,
        None => RangePredicate::unbounded(),
    };
    let params = SearchParams {
        k: a.k,
        range,
        itopk: a.itopk,
        search_width: a.width,
        max_iterations: a.max_iter,
        seed_count: a.itopk.min(32),
        rng_seed: a.seed,
    };
    let results = index.search_batch(&queries, &params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["query", "rank", "slot", "id", "distance", "scalar"])?;
    for (qi, res) in results.iter().enumerate() {
        for (rank, nb) in res.neighbors.iter().enumerate() {
            w.write_record([
                qi.to_string(),
                rank.to_string(),
                nb.slot.to_string(),
                index.external_id(nb.slot).to_string(),
                nb.dist.sqrt().to_string(),
                index.scalar(nb.slot).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let base = load_index(&a.index)?;
    let mut spec: SweepSpec = match &a.grid {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => SweepSpec {
            k: a.k,
            seed: a.seed,
            ..SweepSpec::default()
        },
    };
    if let Some(sel) = a.selectivities {
        spec.selectivities = sel;
    }
    let queries = match &a.queries {
        Some(p) => read_fvecs(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let count = a.query_count.min(base.len());
            sample(&mut rng, base.len(), count)
                .into_iter()
                .map(|s| base.vector(s as u32).to_vec())
                .collect()
        }
    };
    let records: Vec<VectorRecord> = (0..base.len())
        .map(|s| VectorRecord::new(base.vector(s as u32).to_vec(), base.scalar(s as u32), s as u64))
        .collect();
    let cache = a.gt_cache.as_ref().map(GroundTruthCache::new);
    let mut base = Some(base);
    let report = run_sweep(
        |variant| {
            if variant.k_local.is_none() && variant.alpha.is_none() {
                if let Some(idx) = base.take() {
                    return Ok(idx);
                }
            }
            let mut params = BuildParams {
                bucket_capacity: a.bucket_cap,
                ..BuildParams::default()
            };
            if let Some(k) = variant.k_local {
                params.k_local = k;
            }
            match variant.alpha {
                None => Ok(Index::build(&records, params)?.0),
                Some(alpha) => {
                    let half = records.len() / 2;
                    let (mut idx, _) = Index::build_with(&records[..half], params, Some(records.len()), None)?;
                    idx.insert(&records[half..], a.batch_size, &InsertParams::with_alpha(alpha))?;
                    Ok(idx)
                }
            }
        },
        &queries,
        &spec,
        cache.as_ref(),
    )?;
    if let Some(p) = &a.json {
        fs::write(p, report.to_json()?)?;
    }
    report.write_csv(out)
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let index = load_index(&a.index)?;
    let scc = scc_count(index.graph(), index.len());
    if a.scc {
        writeln!(out, "{scc}")?;
        return Ok(());
    }
    let n = index.len();
    let mut degrees = Vec::with_capacity(n);
    let mut in_degree = vec![0usize; n];
    let mut cross = 0usize;
    let mut edges = 0usize;
    for u in 0..n {
        let mut deg = 0;
        for v in index.graph().neighbors(u) {
            deg += 1;
            in_degree[v as usize] += 1;
            if index.buckets().bucket_of_slot(v) != index.buckets().bucket_of_slot(u as u32) {
                cross += 1;
            }
        }
        edges += deg;
        degrees.push(deg);
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&json!({
            "nodes": n,
            "capacity": index.capacity(),
            "dim": index.dim(),
            "k_max": index.params().k_max,
            "k_local": index.params().k_local,
            "buckets": index.buckets().bucket_count(),
            "bucket_sizes": index.buckets().bucket_sizes(),
            "edges": edges,
            "mean_out_degree": if n > 0 { edges as f64 / n as f64 } else { 0.0 },
            "min_out_degree": degrees.iter().min().copied().unwrap_or(0),
            "zero_in_degree": in_degree.iter().filter(|&&d| d == 0).count(),
            "cross_bucket_edge_ratio": if edges > 0 { cross as f64 / edges as f64 } else { 0.0 },
            "scc": scc,
        }))?
    )?;
    Ok(())
}
