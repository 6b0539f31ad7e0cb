//! `FPM1` field snapshots: one ASCII header line
//! `FPM1 dim=<d> n=<N> L=<decimal> t=<decimal>` followed by `N^d`
//! little-endian `f64` samples in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

const MAGIC: &str = "FPM1";

pub fn write_snapshot<W: Write>(mut w: W, field: &RealField, t: f64) -> Result<()> {
    let g = field.grid();
    // `{}` prints the shortest decimal that parses back to the same f64
    writeln!(w, "{MAGIC} dim={} n={} L={} t={}", g.dim(), g.n_points(), g.side_length(), t)?;
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(RealField, f64)> {
    let mut reader = BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let header = header
        .strip_suffix('\n')
        .ok_or_else(|| Error::Snapshot("header not newline-terminated".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Snapshot("missing FPM1 magic".into()));
    }
    let mut field = |key: &str| -> Result<&str> {
        let part = parts
            .next()
            .ok_or_else(|| Error::Snapshot(format!("missing {key}=")))?;
        part.strip_prefix(key)
            .and_then(|p| p.strip_prefix('='))
            .ok_or_else(|| Error::Snapshot(format!("expected {key}=, got {part:?}")))
    };
    let bad = |key: &str| Error::Snapshot(format!("unparsable {key}"));
    let dim: usize = field("dim")?.parse().map_err(|_| bad("dim"))?;
    let n: usize = field("n")?.parse().map_err(|_| bad("n"))?;
    let length: f64 = field("L")?.parse().map_err(|_| bad("L"))?;
    let t: f64 = field("t")?.parse().map_err(|_| bad("t"))?;
    let grid = Grid::new(dim, n, length)?;

    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Snapshot(format!(
            "expected {} payload bytes, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((RealField::new(grid, values)?, t))
}

pub fn save_snapshot(path: &Path, field: &RealField, t: f64) -> Result<()> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, field, t)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<(RealField, f64)> {
    read_snapshot(fs::File::open(path)?)
}
