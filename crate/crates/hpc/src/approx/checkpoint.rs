use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::HpcError;

pub const CONTAINER_MAGIC: &[u8; 4] = b"HPC1";
const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Flat binary container: magic "HPC1", version, record count, then per-record
/// name length + name, rank + dims (u32 LE), raw little-endian f64 values.
pub fn write_container(path: &Path, records: &[TensorRecord]) -> Result<(), HpcError> {
    let file = File::create(path)
        .map_err(|e| HpcError::Io(format!("cannot create '{}': {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| HpcError::Io(format!("write '{}': {e}", path.display()));
    w.write_all(CONTAINER_MAGIC).map_err(io)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(records.len() as u32).to_le_bytes())
        .map_err(io)?;
    for rec in records {
        let count: usize = rec.shape.iter().product();
        assert_eq!(
            count,
            rec.values.len(),
            "record '{}' shape/value mismatch",
            rec.name
        );
        let name = rec.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())
            .map_err(io)?;
        w.write_all(name).map_err(io)?;
        w.write_all(&(rec.shape.len() as u32).to_le_bytes())
            .map_err(io)?;
        for &d in &rec.shape {
            w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
        }
        for &v in &rec.values {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_container(path: &Path) -> Result<Vec<TensorRecord>, HpcError> {
    let file = File::open(path)
        .map_err(|e| HpcError::Io(format!("cannot open '{}': {e}", path.display())))?;
    let mut r = BufReader::new(file);
    let io = |e: std::io::Error| HpcError::Io(format!("read '{}': {e}", path.display()));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CONTAINER_MAGIC {
        return Err(HpcError::Format(format!(
            "'{}' is not an HPC1 container (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r).map_err(io)?;
    if version != CONTAINER_VERSION {
        return Err(HpcError::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let count = read_u32(&mut r).map_err(io)? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r).map_err(io)? as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(io)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| HpcError::Format("tensor name is not valid UTF-8".into()))?;
        let rank = read_u32(&mut r).map_err(io)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r).map_err(io)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(io)?;
            values.push(f64::from_le_bytes(buf));
        }
        records.push(TensorRecord {
            name,
            shape,
            values,
        });
    }
    Ok(records)
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        let records = vec![
            TensorRecord {
                name: "a/w0".into(),
                shape: vec![2, 3],
                values: vec![1.5, -2.25, 1e-300, f64::MIN_POSITIVE, 0.1 + 0.2, -0.0],
            },
            TensorRecord {
                name: "b".into(),
                shape: vec![1],
                values: vec![std::f64::consts::PI],
            },
        ];
        write_container(&path, &records).unwrap();
        let back = read_container(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (r, b) in records.iter().zip(&back) {
            assert_eq!(r.name, b.name);
            assert_eq!(r.shape, b.shape);
            let lhs: Vec<u64> = r.values.iter().map(|v| v.to_bits()).collect();
            let rhs: Vec<u64> = b.values.iter().map(|v| v.to_bits()).collect();
            assert_eq!(lhs, rhs, "bit-exact round trip");
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOPE....").unwrap();
        assert!(read_container(&path).is_err());
    }
}
