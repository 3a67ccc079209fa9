//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                      |
//! |--------|------|------------------------------|
//! | 0      | 8    | magic `GPCYLFLD`             |
//! | 8      | 1    | format version (`1`)         |
//! | 9      | 8    | `L` as f64                   |
//! | 17     | 8    | `nx` as u64                  |
//! | 25     | 8    | `ell` as f64                 |
//! | 33     | 8    | `ny` as u64                  |
//! | 41     | 16 n | samples `(re, im)` as f64    |
//!
//! Sample `(i, j)` is stored at position `i * ny + j`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Field2D, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GPCYLFLD";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 41;

pub fn encode(f: &Field2D) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&g.half_length().to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&g.ell().to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    for z in f.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<Field2D> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if bytes[8] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[8])));
    }
    let nx = usize::try_from(u64_at(bytes, 17)).map_err(|e| Error::Format(e.to_string()))?;
    let ny = usize::try_from(u64_at(bytes, 33)).map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid::new(f64_at(bytes, 9), nx, f64_at(bytes, 25), ny)
        .map_err(|e| Error::Format(format!("invalid grid: {e}")))?;
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("sample count overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Field2D::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_to(f: &Field2D, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(f))?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<Field2D> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(f: &Field2D, path: &Path) -> Result<()> {
    fs::write(path, encode(f))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Field2D> {
    decode(&fs::read(path)?)
}
