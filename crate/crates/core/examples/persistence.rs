//! Save an index, load it back, keep inserting, and save again.

use bucketann::io::{gen_synthetic, load_index, save_index, Distribution};
use bucketann::{BuildParams, Index, InsertParams, RangePredicate, SearchParams};

fn main() -> bucketann::Result<()> {
    let dir = std::env::temp_dir().join("bucketann-persistence-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("index.grab");

    let records = gen_synthetic(6_000, 16, Distribution::Gaussian, 4).records();
    let params = BuildParams {
        bucket_capacity: 500,
        headroom: 2.0,
        ..BuildParams::default()
    };
    let (index, _) = Index::build(&records[..4_000], params)?;
    save_index(&index, &path)?;
    println!("saved {} nodes ({} bytes)", index.len(), std::fs::metadata(&path)?.len());

    let mut loaded = load_index(&path)?;
    loaded.insert(&records[4_000..], 500, &InsertParams::default())?;
    save_index(&loaded, &path)?;
    println!("reloaded, grew to {} of {} slots, saved again", loaded.len(), loaded.capacity());

    let again = load_index(&path)?;
    let q = &records[5_000].vector;
    let p = SearchParams::new(3, RangePredicate::unbounded());
    assert_eq!(again.search(q, &p)?.neighbors, loaded.search(q, &p)?.neighbors);
    println!("nearest to record 5000: {:?}", again.search(q, &p)?.slots());
    Ok(())
}
