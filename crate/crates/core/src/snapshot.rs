//! Binary field snapshots.
//!
//! A snapshot is one ASCII header line followed by the grid values as
//! row-major little-endian `f64`:
//!
//! ```text
//! CHACSNAP v1 dim=2 n=64 field=phi time=2.5000000000000000e-1 endian=little\n
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};

pub const MAGIC: &str = "CHACSNAP";
const VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub field: String,
    pub time: f64,
}

pub fn write_snapshot<W: Write>(mut out: W, field: &SpectralField, name: &str, time: f64) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
        return Err(Error::Snapshot(format!("field name {name:?} must be a non-empty word")));
    }
    let grid = field.grid();
    writeln!(
        out,
        "{MAGIC} {VERSION} dim={} n={} field={name} time={time:.16e} endian=little",
        grid.dim(),
        grid.points_per_axis()
    )?;
    let mut bytes = Vec::with_capacity(8 * grid.len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_header<R: BufRead>(input: &mut R) -> Result<SnapshotHeader> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let mut parts = line.trim_end().split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Snapshot("missing magic".into()));
    }
    if parts.next() != Some(VERSION) {
        return Err(Error::Snapshot("unsupported version".into()));
    }
    let (mut dim, mut n, mut field, mut time, mut endian) = (None, None, None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("bad header entry {part:?}")))?;
        let bad = |_| Error::Snapshot(format!("bad value for {key}: {value:?}"));
        match key {
            "dim" => dim = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "field" => field = Some(value.to_string()),
            "time" => time = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "endian" => endian = Some(value.to_string()),
            _ => return Err(Error::Snapshot(format!("unknown header key {key:?}"))),
        }
    }
    if endian.as_deref() != Some("little") {
        return Err(Error::Snapshot("only little-endian snapshots are supported".into()));
    }
    let missing = |k: &str| Error::Snapshot(format!("header lacks {k}"));
    Ok(SnapshotHeader {
        dim: dim.ok_or_else(|| missing("dim"))?,
        n: n.ok_or_else(|| missing("n"))?,
        field: field.ok_or_else(|| missing("field"))?,
        time: time.ok_or_else(|| missing("time"))?,
    })
}

/// Reads a snapshot, building a fresh grid from its header.
pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<(SnapshotHeader, SpectralField)> {
    let header = read_header(&mut input)?;
    let grid: Arc<TorusGrid> = TorusGrid::new(header.dim, header.n)?;
    let mut bytes = vec![0u8; 8 * grid.len()];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Snapshot(format!("truncated payload: {e}")))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after payload".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = SpectralField::from_values(&grid, values)?;
    Ok((header, field))
}
