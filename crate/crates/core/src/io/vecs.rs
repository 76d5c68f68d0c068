use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Splits an `.fvecs`/`.ivecs` byte buffer into records. Each record is an
/// i32 dimension followed by that many 4-byte values.
fn split_records(bytes: &[u8]) -> Result<(usize, Vec<&[u8]>)> {
    let mut pos = 0;
    let mut dim: Option<usize> = None;
    let mut out = Vec::new();
    while pos < bytes.len() {
        let Some(head) = bytes.get(pos..pos + 4) else {
            return Err(parse_err(pos, "truncated dimension header"));
        };
        let d = i32::from_le_bytes(head.try_into().unwrap());
        if d <= 0 {
            return Err(parse_err(pos, format!("invalid dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(parse_err(pos, format!("dimension {d} differs from {prev}")));
            }
            _ => {}
        }
        let body = pos + 4;
        let end = body + 4 * d;
        if end > bytes.len() {
            return Err(parse_err(body, format!("truncated record: need {} bytes, have {}", 4 * d, bytes.len() - body)));
        }
        out.push(&bytes[body..end]);
        pos = end;
    }
    Ok((dim.unwrap_or(0), out))
}

/// Reads an `.fvecs` file. An empty file yields no rows.
pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let bytes = fs::read(path)?;
    let (_, recs) = split_records(&bytes)?;
    Ok(recs
        .into_iter()
        .map(|r| r.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        .collect())
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    let bytes = fs::read(path)?;
    let (_, recs) = split_records(&bytes)?;
    Ok(recs
        .into_iter()
        .map(|r| r.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        .collect())
}

fn write_records<T: Copy>(path: &Path, rows: &[Vec<T>], to_le: impl Fn(T) -> [u8; 4]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    if let Some(first) = rows.first() {
        let d = first.len();
        for r in rows {
            if r.len() != d || d == 0 {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: r.len(),
                });
            }
            w.write_all(&(d as i32).to_le_bytes())?;
            for &v in r {
                w.write_all(&to_le(v))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fvecs(path: impl AsRef<Path>, rows: &[Vec<f32>]) -> Result<()> {
    write_records(path.as_ref(), rows, f32::to_le_bytes)
}

pub fn write_ivecs(path: impl AsRef<Path>, rows: &[Vec<i32>]) -> Result<()> {
    write_records(path.as_ref(), rows, i32::to_le_bytes)
}

/// Scalar sidecar: u64 little-endian count, then that many f32 values.
pub fn read_scalars(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let bytes = fs::read(path)?;
    let Some(head) = bytes.get(..8) else {
        return Err(parse_err(0, "truncated scalar count header"));
    };
    let n = u64::from_le_bytes(head.try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != n.saturating_mul(4) {
        let offset = 8 + body.len().min(n.saturating_mul(4));
        return Err(parse_err(offset, format!("expected {n} scalars, found {} bytes", body.len())));
    }
    Ok(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_scalars(path: impl AsRef<Path>, scalars: &[f32]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&(scalars.len() as u64).to_le_bytes())?;
    for s in scalars {
        w.write_all(&s.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.fvecs");
        let mut bytes = vec![2, 0, 0, 0];
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        fs::write(&p, bytes).unwrap();
        assert_eq!(read_fvecs(&p).unwrap(), vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.fvecs");
        fs::write(&p, []).unwrap();
        assert!(read_fvecs(&p).unwrap().is_empty());
    }

    #[test]
    fn truncated_and_inconsistent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.fvecs");
        let mut bytes = vec![2, 0, 0, 0];
        bytes.extend(1.0f32.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        match read_fvecs(&p) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }

        let mut bytes = vec![1, 0, 0, 0];
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend([2, 0, 0, 0]);
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        match read_fvecs(&p) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec![0.5f32, -1.0, 3.25], vec![7.0, 8.0, 9.0]];
        let p = dir.path().join("r.fvecs");
        write_fvecs(&p, &rows).unwrap();
        assert_eq!(read_fvecs(&p).unwrap(), rows);

        let ids = vec![vec![1i32, 2], vec![3, 4]];
        let p = dir.path().join("r.ivecs");
        write_ivecs(&p, &ids).unwrap();
        assert_eq!(read_ivecs(&p).unwrap(), ids);

        let s = vec![0.1f32, 0.2, 0.9];
        let p = dir.path().join("s.bin");
        write_scalars(&p, &s).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 8 + 12);
        assert_eq!(read_scalars(&p).unwrap(), s);
    }

    #[test]
    fn scalar_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        let mut bytes = 3u64.to_le_bytes().to_vec();
        bytes.extend(1.0f32.to_le_bytes());
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_scalars(&p), Err(Error::Parse { .. })));
    }
}
