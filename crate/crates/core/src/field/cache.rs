//! Binary field cache.
//!
//! Layout: magic "LQGF", format version u16, topology u8, n u32, L f64,
//! t_min f64, kind u8, seed u64 + u64, then n*n little-endian f64 values
//! row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::rng::RngSeed;

use super::{Field, FieldKind};

const MAGIC: &[u8; 4] = b"LQGF";
const VERSION: u16 = 1;

fn kind_code(k: FieldKind) -> u8 {
    match k {
        FieldKind::Wn => 0,
        FieldKind::WnTruncated => 1,
        FieldKind::ZeroBoundary => 2,
        FieldKind::Composite => 3,
    }
}

fn kind_from(code: u8) -> Result<FieldKind> {
    Ok(match code {
        0 => FieldKind::Wn,
        1 => FieldKind::WnTruncated,
        2 => FieldKind::ZeroBoundary,
        3 => FieldKind::Composite,
        other => return Err(Error::BadCache(format!("unknown kind code {other}"))),
    })
}

pub fn write_field_cache(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let topo: u8 = match field.grid.topology {
        Topology::PlaneWindow => 0,
        Topology::Torus => 1,
    };
    w.write_all(&[topo])?;
    w.write_all(&(field.grid.n as u32).to_le_bytes())?;
    w.write_all(&field.grid.len.to_le_bytes())?;
    w.write_all(&field.scale_range.0.to_le_bytes())?;
    w.write_all(&[kind_code(field.kind)])?;
    w.write_all(&field.seed.master.to_le_bytes())?;
    w.write_all(&field.seed.stream.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_cache(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadCache("bad magic".into()));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != VERSION {
        return Err(Error::BadCache(format!("unsupported version {version}")));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let topology = match b1[0] {
        0 => Topology::PlaneWindow,
        1 => Topology::Torus,
        other => return Err(Error::BadCache(format!("unknown topology code {other}"))),
    };
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let len = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t_min = f64::from_le_bytes(b8);
    r.read_exact(&mut b1)?;
    let kind = kind_from(b1[0])?;
    r.read_exact(&mut b8)?;
    let master = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let stream = u64::from_le_bytes(b8);
    let grid = Grid::new(n, (0.0, 0.0), len, topology)
        .map_err(|e| Error::BadCache(format!("bad grid: {e}")))?;
    let mut values = vec![0.0f64; n * n];
    for v in values.iter_mut() {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok(Field {
        grid,
        values,
        scale_range: (t_min, 1.0),
        kind,
        seed: RngSeed::new(master, stream),
    })
}
