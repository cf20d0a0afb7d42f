//! Vector-matrix products `x^T W` evaluated directly on each storage format.
//!
//! Every kernel accumulates in `f64`, one running sum per column, adding
//! terms in ascending row order. The dense kernel adds every entry; the
//! sparse ones add stored entries only.

mod coded;
mod pardot;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::formats::{CompressedMatrix, CscMatrix, IndexMapMatrix};
use crate::matrix::DenseMatrix;

pub use coded::{dot_ham, dot_sham, dot_sham_counted};
pub use pardot::{pardot, pardot_sequential, row_chunks, DotBatch};

/// Output of a single product plus the number of multiply-adds performed.
#[derive(Debug, Clone, PartialEq)]
pub struct DotResult {
    pub out: Vec<f64>,
    pub flops: u64,
}

/// A matrix that can be multiplied from the left by a vector.
pub trait CompressedDot: Sync {
    fn shape(&self) -> (usize, usize);

    /// Writes `x^T W` into `out` (length `m`) and returns the multiply-add
    /// count.
    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64>;

    fn dot(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.dot_counted(x)?.out)
    }

    fn dot_counted(&self, x: &[f64]) -> Result<DotResult> {
        let mut out = vec![0.0; self.shape().1];
        let flops = self.dot_into(x, &mut out)?;
        Ok(DotResult { out, flops })
    }
}

pub(crate) fn check_dims(x: &[f64], out: &[f64], n: usize, m: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if out.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: out.len(),
        });
    }
    Ok(())
}

impl CompressedDot for DenseMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        let (n, m) = self.shape();
        check_dims(x, out, n, m)?;
        out.fill(0.0);
        // Row sweep for locality; each column still sees rows in order.
        for (i, &xi) in x.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += xi * w as f64;
            }
        }
        Ok((n * m) as u64)
    }
}

impl CompressedDot for CscMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        check_dims(x, out, self.rows(), self.cols())?;
        let (nz, ri, cb) = (self.nz(), self.ri(), self.cb());
        for (j, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for pos in cb[j] as usize..cb[j + 1] as usize {
                sum += x[ri[pos] as usize] * nz[pos] as f64;
            }
            *o = sum;
        }
        Ok(nz.len() as u64)
    }
}

impl CompressedDot for IndexMapMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        let n = self.rows();
        check_dims(x, out, n, self.cols())?;
        let (centers, idx) = (self.centers(), self.indices());
        for (j, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                sum += xi * centers[idx.get(j * n + i)] as f64;
            }
            *o = sum;
        }
        Ok((n * self.cols()) as u64)
    }
}

impl CompressedDot for CompressedMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        match self {
            CompressedMatrix::Ham(h) => h.dot_into(x, out),
            CompressedMatrix::Sham(s) => s.dot_into(x, out),
            CompressedMatrix::Csc(c) => c.dot_into(x, out),
            CompressedMatrix::IndexMap(i) => i.dot_into(x, out),
        }
    }
}

/// Reference product with 64-bit accumulation.
pub fn dot_dense(x: &[f64], m: &DenseMatrix) -> Result<Vec<f64>> {
    m.dot(x)
}

pub fn dot_csc(x: &[f64], c: &CscMatrix) -> Result<Vec<f64>> {
    c.dot(x)
}

pub fn dot_index_map(x: &[f64], im: &IndexMapMatrix) -> Result<Vec<f64>> {
    im.dot(x)
}

/// Median wall time in nanoseconds of `runs` calls to `f`, after `warmup`
/// untimed calls.
pub fn median_ns(warmup: usize, runs: usize, mut f: impl FnMut()) -> u64 {
    for _ in 0..warmup {
        f();
    }
    let mut times: Vec<u64> = (0..runs.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_nanos() as u64
        })
        .collect();
    times.sort_unstable();
    let mid = times.len() / 2;
    if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{to_csc, to_index_map};
    use crate::matrix::tests::example_matrix;
    use crate::quant::{Codebook, Method};

    #[test]
    fn dense_examples() {
        let m = example_matrix();
        assert_eq!(
            dot_dense(&[1.0, 0.0, 0.0, 0.0, 0.0], &m).unwrap(),
            vec![1.0, 0.0, 4.0, 0.0, 0.0]
        );
        assert_eq!(dot_dense(&[0.0; 5], &m).unwrap(), vec![0.0; 5]);
        assert_eq!(dot_dense(&[1.0; 5], &m).unwrap(), vec![3.0, 13.0, 4.0, 0.0, 11.0]);
        assert!(matches!(dot_dense(&[1.0; 4], &m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn csc_and_index_map_examples() {
        let m = example_matrix();
        let c = to_csc(&m);
        assert_eq!(dot_csc(&[1.0; 5], &c).unwrap(), vec![3.0, 13.0, 4.0, 0.0, 11.0]);
        assert_eq!(c.dot_counted(&[1.0; 5]).unwrap().flops, 7);
        let im = to_index_map(&m, &Codebook::from_matrix(&m, Method::Cws)).unwrap();
        assert_eq!(dot_index_map(&[1.0; 5], &im).unwrap(), vec![3.0, 13.0, 4.0, 0.0, 11.0]);
        let z = to_csc(&DenseMatrix::zeros(3, 4).unwrap());
        assert_eq!(dot_csc(&[2.0; 3], &z).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn median_of_runs() {
        let mut calls = 0;
        let _ = median_ns(1, 5, || calls += 1);
        assert_eq!(calls, 6);
    }
}
