use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, WordSize};

/// Compressed sparse column storage. Offsets in `cb` are absolute and 0-based;
/// column `j` owns `nz[cb[j]..cb[j + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n: usize,
    m: usize,
    pub(crate) nz: Vec<f32>,
    pub(crate) ri: Vec<u32>,
    pub(crate) cb: Vec<u32>,
}

impl CscMatrix {
    /// Assembles and validates raw vectors: `cb` has `m + 1` non-decreasing
    /// entries starting at 0 and ending at `|nz|`, row indices are strictly
    /// increasing within each column, and no stored value is zero.
    pub fn new(n: usize, m: usize, nz: Vec<f32>, ri: Vec<u32>, cb: Vec<u32>) -> Result<Self> {
        validate_structure(n, m, &ri, &cb)?;
        if nz.len() != ri.len() {
            return Err(Error::DimensionMismatch {
                expected: ri.len(),
                actual: nz.len(),
            });
        }
        if let Some(v) = nz.iter().find(|v| **v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("stored value {v} is zero or non-finite")));
        }
        Ok(Self { n, m, nz, ri, cb })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    /// Number of stored non-zeros `q`.
    pub fn nnz(&self) -> usize {
        self.nz.len()
    }

    pub fn nz(&self) -> &[f32] {
        &self.nz
    }

    pub fn ri(&self) -> &[u32] {
        &self.ri
    }

    pub fn cb(&self) -> &[u32] {
        &self.cb
    }

    /// `ri` and `cb` shifted to 1-based positions, as usually printed.
    pub fn one_based(&self) -> (Vec<u32>, Vec<u32>) {
        (
            self.ri.iter().map(|r| r + 1).collect(),
            self.cb.iter().map(|c| c + 1).collect(),
        )
    }

    /// Accounted size `b (2q + m + 1)`: every value and index is one word.
    pub fn accounted_bits(&self, b: WordSize) -> u64 {
        b.bits() as u64 * (2 * self.nz.len() as u64 + self.m as u64 + 1)
    }
}

/// Shared by CSC and sHAM, which carry identical index vectors.
pub(crate) fn validate_structure(n: usize, m: usize, ri: &[u32], cb: &[u32]) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidMatrix(format!(
            "dimensions must be positive, got {n}x{m}"
        )));
    }
    if cb.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            expected: m + 1,
            actual: cb.len(),
        });
    }
    if cb[0] != 0 || cb[m] as usize != ri.len() {
        return Err(Error::InvalidMatrix(format!(
            "column boundaries must run from 0 to {}, got {}..{}",
            ri.len(),
            cb[0],
            cb[m]
        )));
    }
    if let Some(j) = (0..m).find(|&j| cb[j] > cb[j + 1]) {
        return Err(Error::InvalidMatrix(format!(
            "column boundaries decrease at column {j}"
        )));
    }
    for j in 0..m {
        let (a, b) = (cb[j] as usize, cb[j + 1] as usize);
        let col = &ri[a..b];
        if col.iter().any(|&r| r as usize >= n) {
            return Err(Error::InvalidMatrix(format!("row index out of range in column {j}")));
        }
        if col.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMatrix(format!(
                "row indices not strictly increasing in column {j}"
            )));
        }
    }
    Ok(())
}

/// Row indices and column boundaries of the non-zeros of `m`, column-major.
pub(crate) fn nonzero_structure(m: &DenseMatrix) -> (Vec<f32>, Vec<u32>, Vec<u32>) {
    let (n, cols) = (m.rows(), m.cols());
    let data = m.as_slice();
    let mut nz = Vec::new();
    let mut ri = Vec::new();
    let mut cb = Vec::with_capacity(cols + 1);
    cb.push(0);
    for j in 0..cols {
        for i in 0..n {
            let v = data[i * cols + j];
            if v != 0.0 {
                nz.push(v);
                ri.push(i as u32);
            }
        }
        cb.push(nz.len() as u32);
    }
    (nz, ri, cb)
}

pub fn to_csc(m: &DenseMatrix) -> CscMatrix {
    let (nz, ri, cb) = nonzero_structure(m);
    CscMatrix {
        n: m.rows(),
        m: m.cols(),
        nz,
        ri,
        cb,
    }
}

pub fn from_csc(c: &CscMatrix) -> Result<DenseMatrix> {
    let mut data = crate::matrix::try_zeroed(c.n * c.m)?;
    for j in 0..c.m {
        for pos in c.cb[j] as usize..c.cb[j + 1] as usize {
            data[c.ri[pos] as usize * c.m + j] = c.nz[pos];
        }
    }
    DenseMatrix::new(c.n, c.m, data)
}
