//! Dense matrix files: a raw little-endian `f32` layout with a 16-byte
//! header (`b"SHMDENSE"`, `n` u32, `m` u32, then row-major values) and
//! headerless CSV with one matrix row per line.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const DENSE_MAGIC: [u8; 8] = *b"SHMDENSE";

pub fn write_raw<W: Write>(m: &DenseMatrix, out: &mut W) -> Result<()> {
    out.write_all(&DENSE_MAGIC)?;
    out.write_all(&(m.rows() as u32).to_le_bytes())?;
    out.write_all(&(m.cols() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.len() * 4);
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_raw(bytes: &[u8]) -> Result<DenseMatrix> {
    let corrupt = |offset: usize, reason: String| Error::CorruptContainer {
        offset: offset as u64,
        reason,
    };
    if bytes.len() < 16 {
        return Err(corrupt(bytes.len(), "dense header needs 16 bytes".into()));
    }
    if bytes[..8] != DENSE_MAGIC {
        return Err(corrupt(0, "bad dense magic".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let need = (n as u64) * (m as u64) * 4;
    let have = (bytes.len() - 16) as u64;
    if need != have {
        return Err(corrupt(16, format!("{n}x{m} needs {need} value bytes, found {have}")));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::new(n, m, data)
}

pub fn write_csv<W: Write>(m: &DenseMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV rows. Blank lines and lines starting with `#` are skipped.
pub fn read_csv<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f32>().map_err(|e| Error::Parse {
                    line,
                    reason: format!("'{f}': {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

/// Reads either layout, chosen by the leading magic bytes.
pub fn read_dense_bytes(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.starts_with(&DENSE_MAGIC) {
        read_raw(bytes)
    } else {
        read_csv(bytes)
    }
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_dense_bytes(&fs::read(path)?)
}

/// Writes CSV when the extension is `.csv`, the raw layout otherwise.
pub fn write_dense(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv(m, &mut buf)?;
    } else {
        write_raw(m, &mut buf)?;
    }
    fs::write(path, buf)?;
    Ok(())
}
