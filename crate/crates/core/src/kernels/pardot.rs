use std::ops::Range;

use crate::error::{Error, Result};
use crate::parallel::map_chunks;

use super::CompressedDot;

/// Row-major `r x c` block of `f64`, used for batches of input vectors and
/// for batched outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DotBatch {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DotBatch {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::DimensionMismatch {
                expected: rows.saturating_mul(cols),
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Consecutive row ranges of length `ceil(r / q)` (the last may be
/// shorter), with `q` clamped to `r`.
pub fn row_chunks(r: usize, q: usize) -> Vec<Range<usize>> {
    if r == 0 {
        return Vec::new();
    }
    let q = q.clamp(1, r);
    let size = r.div_ceil(q);
    (0..r).step_by(size).map(|a| a..(a + size).min(r)).collect()
}

/// `X W` for a batch `X` of row vectors, split into row chunks that run on
/// `q` workers. Rows never interact, so the result is bit-identical for
/// every `q`.
pub fn pardot<W: CompressedDot + ?Sized>(x: &DotBatch, w: &W, q: usize) -> Result<DotBatch> {
    if q == 0 {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    let (n, m) = w.shape();
    if x.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.cols,
        });
    }
    let chunks = row_chunks(x.rows, q);
    let workers = chunks.len();
    let parts = map_chunks(chunks, workers, |range| -> Result<Vec<f64>> {
        let mut out = vec![0.0; range.len() * m];
        for (k, i) in range.enumerate() {
            w.dot_into(x.row(i), &mut out[k * m..(k + 1) * m])?;
        }
        Ok(out)
    });
    let mut data = Vec::with_capacity(x.rows * m);
    for p in parts {
        data.extend(p?);
    }
    DotBatch::new(x.rows, m, data)
}

/// One row at a time on the calling thread.
pub fn pardot_sequential<W: CompressedDot + ?Sized>(x: &DotBatch, w: &W) -> Result<DotBatch> {
    let (n, m) = w.shape();
    if x.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.cols,
        });
    }
    let mut data = vec![0.0; x.rows * m];
    for i in 0..x.rows {
        w.dot_into(x.row(i), &mut data[i * m..(i + 1) * m])?;
    }
    DotBatch::new(x.rows, m, data)
}
