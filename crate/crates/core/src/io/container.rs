use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::layout::{AdjacencyMatrix, BucketMeta, VectorStore};
use crate::types::{BuildParams, VectorRecord};

pub const MAGIC: [u8; 4] = *b"GRAB";
pub const CONTAINER_VERSION: u32 = 1;
const METRIC_L2: u8 = 0;

/// Serializes the live part of an index. Layout, all little-endian:
///
/// ```text
/// "GRAB" | version u32 | n u64 | capacity u64 | d u32 | k_max u32 | k_local u32 | m u32 | metric u8
/// vectors f32[n*d] | scalars f32[n] | adjacency u32[n*k_max] | boundaries f32[m+1] | slot->bucket u32[n]
/// ```
pub fn write_index<W: Write>(index: &Index, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let n = index.len();
    let d = index.dim();
    let meta = index.buckets();
    w.write_all(&MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(index.capacity() as u64).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&(index.params().k_max as u32).to_le_bytes())?;
    w.write_all(&(index.params().k_local as u32).to_le_bytes())?;
    w.write_all(&(meta.bucket_count() as u32).to_le_bytes())?;
    w.write_all(&[METRIC_L2])?;

    for v in &index.store().raw_vectors()[..n * d] {
        w.write_all(&v.to_le_bytes())?;
    }
    for s in index.store().scalars() {
        w.write_all(&s.to_le_bytes())?;
    }
    for a in index.graph().rows(n) {
        w.write_all(&a.to_le_bytes())?;
    }
    for b in meta.boundaries() {
        w.write_all(&b.to_le_bytes())?;
    }
    for &b in meta.index_to_bucket() {
        w.write_all(&(b as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_index(index: &Index, path: impl AsRef<Path>) -> Result<()> {
    write_index(index, fs::File::create(path)?)
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated at byte {} reading {what}", self.offset)))?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.bytes::<4>(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.bytes::<8>(what).map(u64::from_le_bytes)
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        self.bytes::<4>(what).map(f32::from_le_bytes)
    }
}

/// Inverse of [`write_index`]. External ids are not stored, so loaded
/// records get id = slot. Build parameters other than the degrees take
/// their defaults.
pub fn read_index<R: Read>(input: R) -> Result<Index> {
    let mut c = Cursor {
        inner: BufReader::new(input),
        offset: 0,
    };
    if c.bytes::<4>("magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32("version")?;
    if version != CONTAINER_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = c.u64("n")? as usize;
    let capacity = c.u64("capacity")? as usize;
    let d = c.u32("d")? as usize;
    let k_max = c.u32("k_max")? as usize;
    let k_local = c.u32("k_local")? as usize;
    let m = c.u32("m")? as usize;
    let metric = c.bytes::<1>("metric")?[0];
    if metric != METRIC_L2 {
        return Err(Error::Format(format!("unknown metric {metric}")));
    }
    if n > capacity || d == 0 || k_max == 0 || m == 0 {
        return Err(Error::Format(format!("inconsistent header n={n} capacity={capacity} d={d} k_max={k_max} m={m}")));
    }

    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            row.push(c.f32("vectors")?);
        }
        vectors.push(row);
    }
    let mut records = Vec::with_capacity(n);
    for (slot, vector) in vectors.into_iter().enumerate() {
        records.push(VectorRecord::new(vector, c.f32("scalars")?, slot as u64));
    }

    let mut graph = AdjacencyMatrix::new(capacity, k_max);
    for a in graph.rows_mut(n) {
        *a = c.u32("adjacency")?;
    }
    let mut boundaries = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        boundaries.push(c.f32("boundaries")?);
    }
    let mut i2b = Vec::with_capacity(n);
    for _ in 0..n {
        i2b.push(c.u32("bucket map")? as _);
    }
    let mut extra = [0u8; 1];
    if c.inner.read(&mut extra)? != 0 {
        return Err(Error::Format(format!("trailing bytes after offset {}", c.offset)));
    }

    let mut store = VectorStore::with_capacity(d, capacity)?;
    store.append(&records)?;
    let buckets = BucketMeta::from_parts(boundaries, i2b)?;
    let params = BuildParams {
        k_max,
        k_local,
        ..BuildParams::default()
    };
    params.validate()?;
    let index = Index::from_parts(store, graph, buckets, params);
    index.check().map_err(Error::Format)?;
    Ok(index)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index> {
    read_index(fs::File::open(path)?)
}
