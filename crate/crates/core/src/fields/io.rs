//! `.gfld` field container: one-line JSON header, little-endian payload.
//!
//! Layout on disk:
//!
//! ```text
//! GFLD1\n
//! {"spec":{...},"rank":...,"dtype":"f64"}\n
//! <nodes * comps little-endian f64 values, components innermost>
//! ```
//!
//! Complex fields use `"dtype":"c64"` with interleaved re/im pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{CGridField, GridField, Rank};
use super::grid::GridSpec;
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"GFLD1\n";

#[derive(Serialize, Deserialize)]
struct Header {
    spec: GridSpec,
    rank: Rank,
    dtype: String,
}

fn write_header(w: &mut impl Write, spec: &GridSpec, rank: Rank, dtype: &str) -> Result<()> {
    w.write_all(MAGIC)?;
    let header = Header { spec: *spec, rank, dtype: dtype.to_string() };
    let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<Header> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("not a .gfld file".into()));
    }
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(Error::Format("unterminated header".into()));
        }
    }
    serde_json::from_slice(&line).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field(path: &Path, field: &GridField<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, field.spec(), field.rank(), "f64")?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    if header.dtype != "f64" {
        return Err(Error::Format(format!("expected f64 payload, found {}", header.dtype)));
    }
    let count = header.spec.nodes() * header.rank.comps(header.spec.dim);
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    GridField::from_values(header.spec, header.rank, values)
}

pub fn write_cfield(path: &Path, field: &CGridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, field.spec(), field.rank(), "c64")?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cfield(path: &Path) -> Result<CGridField> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    if header.dtype != "c64" {
        return Err(Error::Format(format!("expected c64 payload, found {}", header.dtype)));
    }
    let count = header.spec.nodes() * header.rank.comps(header.spec.dim);
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let im = f64::from_le_bytes(buf);
        values.push(Complex64::new(re, im));
    }
    GridField::from_values(header.spec, header.rank, values)
}
