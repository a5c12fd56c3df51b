//! Field and table serialization: little-endian binary fields with a
//! (dim, n, L) header, CSV export with a header row and '.' decimals,
//! and content hashing for run manifests.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::spectral::{Field, Grid};
use crate::{Error, Result};

/// Write a field as dim:u32, n:u32, L:f64, then the samples, all
/// little-endian IEEE-754/uint32.
pub fn write_field_binary(path: &Path, f: &Field) -> Result<()> {
    let grid = f.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.points_per_dim() as u32).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a field written by `write_field_binary`, validating the header.
pub fn read_field_binary(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    let mut u32_buf = [0u8; 4];
    let mut f64_buf = [0u8; 8];
    r.read_exact(&mut u32_buf)?;
    let dim = u32::from_le_bytes(u32_buf) as usize;
    r.read_exact(&mut u32_buf)?;
    let n = u32::from_le_bytes(u32_buf) as usize;
    r.read_exact(&mut f64_buf)?;
    let l = f64::from_le_bytes(f64_buf);
    let grid = Grid::new(dim, n, l).map_err(|e| {
        Error::Format(format!("field header of {} is invalid: {e}", path.display()))
    })?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut f64_buf).map_err(|_| {
            Error::Format(format!(
                "field file {} is truncated: expected {} samples",
                path.display(),
                grid.len()
            ))
        })?;
        values.push(f64::from_le_bytes(f64_buf));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format(format!(
            "field file {} has trailing bytes beyond {} samples",
            path.display(),
            grid.len()
        )));
    }
    Field::new(grid, values)
}

/// Write a CSV table: comma separator, header row, '.' decimal point.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Usage(format!(
                "csv row {i} has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a field as index,x[,y],value rows.
pub fn write_field_csv(path: &Path, f: &Field) -> Result<()> {
    let grid = f.grid();
    let mut rows = Vec::with_capacity(grid.len());
    for (idx, v) in f.values().iter().enumerate() {
        let (ix, iy) = grid.unflatten(idx);
        let mut row = vec![idx.to_string(), grid.coord(ix).to_string()];
        if grid.dim() == 2 {
            row.push(grid.coord(iy).to_string());
        }
        row.push(v.to_string());
        rows.push(row);
    }
    let header: &[&str] =
        if grid.dim() == 2 { &["index", "x", "y", "value"] } else { &["index", "x", "value"] };
    write_csv(path, header, &rows)
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_hex_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut r = BufReader::new(File::open(path)?);
    let mut buf = [0u8; 8192];
    loop {
        let k = r.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}
