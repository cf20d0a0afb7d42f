//! Dense matrix container and the sparsity / occupancy arithmetic shared by
//! every other module.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `n x m` matrix of 32-bit weights.
///
/// Values are always finite. Negative zero is normalised to `+0.0` on
/// construction so that "zero" has exactly one bit pattern; this keeps the
/// sparse formats (which drop zeros) bit-exact on round trip.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    m: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    pub fn new(n: usize, m: usize, mut data: Vec<f32>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {n}x{m}"
            )));
        }
        let expected = n
            .checked_mul(m)
            .ok_or_else(|| Error::InvalidMatrix("n*m overflows".into()))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        for (i, v) in data.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite value {v} at ({}, {})",
                    i / m,
                    i % m
                )));
            }
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self { n, m, data })
    }

    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, vec![0.0; n.saturating_mul(m)])
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidMatrix(format!(
                "row {bad} has {} columns, expected {m}",
                rows[bad].len()
            )));
        }
        Self::new(n, m, rows.concat())
    }

    /// Builds a matrix from column-major data.
    pub fn from_column_major(n: usize, m: usize, cols: &[f32]) -> Result<Self> {
        if cols.len() != n.saturating_mul(m) {
            return Err(Error::DimensionMismatch {
                expected: n.saturating_mul(m),
                actual: cols.len(),
            });
        }
        let mut data = vec![0.0f32; cols.len()];
        for j in 0..m {
            for i in 0..n {
                data[i * m + j] = cols[j * n + i];
            }
        }
        Self::new(n, m, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.m + j]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Entries in column order (the address-map order).
    pub fn column_order(&self) -> impl Iterator<Item = f32> + '_ {
        (0..self.m).flat_map(move |j| (0..self.n).map(move |i| self.data[i * self.m + j]))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Applies `f` to every entry, keeping the shape.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(self.n, self.m, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Bit-exact equality (after the negative-zero normalisation).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.m == other.m
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Position of the first entry that differs bit-wise, if any.
    pub fn first_mismatch(&self, other: &Self) -> Option<(usize, usize)> {
        if self.n != other.n || self.m != other.m {
            return Some((0, 0));
        }
        self.data
            .iter()
            .zip(&other.data)
            .position(|(a, b)| a.to_bits() != b.to_bits())
            .map(|p| (p / self.m, p % self.m))
    }

    pub fn stats(&self) -> SparsityStats {
        stats(self)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.n, self.m)?;
        if self.data.len() <= 64 {
            for i in 0..self.n {
                write!(f, "\n  {:?}", self.row(i))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    /// Non-zero count.
    pub q: usize,
    /// Non-zero ratio `q / (n m)`.
    pub s: f64,
    /// Distinct values, zero included when present.
    pub k_distinct: usize,
}

impl SparsityStats {
    /// Distinct non-zero values.
    pub fn k_nonzero(&self) -> usize {
        if self.s < 1.0 {
            self.k_distinct - 1
        } else {
            self.k_distinct
        }
    }
}

/// Non-zero count, non-zero ratio and number of distinct values.
///
/// Zero counts as a distinct value only when it occurs.
pub fn stats(m: &DenseMatrix) -> SparsityStats {
    let q = m.data.iter().filter(|v| **v != 0.0).count();
    let distinct: HashSet<u32> = m.data.iter().map(|v| v.to_bits()).collect();
    SparsityStats {
        q,
        s: q as f64 / m.data.len() as f64,
        k_distinct: distinct.len(),
    }
}

/// Bits per memory word. Every bound and size in the crate is expressed in
/// units of this word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum WordSize {
    #[default]
    W32,
    W64,
}

impl WordSize {
    pub fn bits(self) -> u32 {
        match self {
            WordSize::W32 => 32,
            WordSize::W64 => 64,
        }
    }

    pub fn from_bits(b: u32) -> Result<Self> {
        match b {
            32 => Ok(WordSize::W32),
            64 => Ok(WordSize::W64),
            other => Err(Error::InvalidConfig(format!("word size must be 32 or 64, got {other}"))),
        }
    }
}

/// Zero-filled value buffer of `len` entries, failing instead of aborting
/// when the allocation is impossible (e.g. dimensions from a corrupt file).
pub(crate) fn try_zeroed(len: usize) -> Result<Vec<f32>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| Error::InvalidMatrix(format!("cannot allocate {len} entries")))?;
    v.resize(len, 0.0);
    Ok(v)
}

/// Compressed size over uncompressed size (`b n m` bits).
pub fn occupancy_ratio(compressed_bits: u64, n: usize, m: usize, b: WordSize) -> f64 {
    compressed_bits as f64 / (b.bits() as f64 * n as f64 * m as f64)
}
