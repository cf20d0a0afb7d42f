//! Magnitude pruning and the four weight-sharing quantizers.
//!
//! Every quantizer keeps the matrix shape and returns a [`Codebook`] whose
//! `centers[assignments]` reproduces the quantized matrix bit-for-bit.

mod gradient;
mod lloyd;
mod prune;
mod pws;
mod tune;
mod uq;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub use gradient::aggregate_gradient;
pub use lloyd::{quantize_cws, quantize_ecsq, EcsqConfig, CWS_MAX_ITERS, CWS_REL_TOL};
pub use prune::{percentile_threshold, prune, PruneConfig};
pub use pws::quantize_pws;
pub use tune::{tune_to_k, TuneMethod, TuneResult, TunedConfig};
pub use uq::{quantize_uq, round_half_even, UqConfig};

/// Assignment used for entries that were excluded from quantization
/// (pruned zeros when `ignore_zeros` is set). They reconstruct to `0.0`.
pub const PRUNED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cws,
    Pws,
    Uq,
    Ecsq,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cws => "cws",
            Method::Pws => "pws",
            Method::Uq => "uq",
            Method::Ecsq => "ecsq",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cws" => Ok(Method::Cws),
            "pws" => Ok(Method::Pws),
            "uq" => Ok(Method::Uq),
            "ecsq" => Ok(Method::Ecsq),
            other => Err(Error::InvalidConfig(format!("unknown quantizer '{other}'"))),
        }
    }
}

/// Representative values plus the per-entry map into them.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centers: Vec<f32>,
    /// Row-major, one per matrix entry; [`PRUNED`] for excluded zeros.
    pub assignments: Vec<u32>,
    pub method: Method,
    pub rows: usize,
    pub cols: usize,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn value(&self, idx: usize) -> f32 {
        match self.assignments[idx] {
            PRUNED => 0.0,
            a => self.centers[a as usize],
        }
    }

    pub fn has_pruned(&self) -> bool {
        self.assignments.contains(&PRUNED)
    }

    pub fn reconstruct(&self) -> Result<DenseMatrix> {
        DenseMatrix::new(
            self.rows,
            self.cols,
            (0..self.assignments.len()).map(|i| self.value(i)).collect(),
        )
    }

    /// Checks index bounds and shape.
    pub fn validate(&self) -> Result<()> {
        if self.assignments.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: self.assignments.len(),
            });
        }
        let k = self.centers.len() as u32;
        if let Some(bad) = self.assignments.iter().find(|&&a| a != PRUNED && a >= k) {
            return Err(Error::InvalidConfig(format!(
                "assignment {bad} out of range for {k} centers"
            )));
        }
        Ok(())
    }

    /// Codebook whose centers are the sorted distinct values of `quantized`.
    /// Entries where `excluded` is true get [`PRUNED`].
    pub(crate) fn from_values(quantized: &DenseMatrix, excluded: impl Fn(usize) -> bool, method: Method) -> Self {
        let data = quantized.as_slice();
        let mut centers: Vec<f32> = data
            .iter()
            .enumerate()
            .filter(|(i, _)| !excluded(*i))
            .map(|(_, v)| *v)
            .collect();
        centers.sort_by(f32::total_cmp);
        centers.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let assignments = data
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if excluded(i) {
                    PRUNED
                } else {
                    centers
                        .binary_search_by(|c| c.total_cmp(v))
                        .expect("value present in centers") as u32
                }
            })
            .collect();
        Codebook {
            centers,
            assignments,
            method,
            rows: quantized.rows(),
            cols: quantized.cols(),
        }
    }

    /// Codebook over every distinct value of `m`, zero included. Used when a
    /// matrix reaches the index-map format without passing a quantizer.
    pub fn from_matrix(m: &DenseMatrix, method: Method) -> Self {
        Self::from_values(m, |_| false, method)
    }
}

/// Iteration diagnostics for the iterative quantizers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuantDiagnostics {
    pub iterations: usize,
    /// False when the iteration cap was hit before the stopping rule fired.
    pub converged: bool,
    /// Objective after each accepted iteration (Lloyd / Lagrange cost).
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Quantized {
    pub matrix: DenseMatrix,
    pub codebook: Codebook,
    pub diagnostics: QuantDiagnostics,
}

/// Indices of the entries a quantizer operates on.
pub(crate) fn eligible_indices(m: &DenseMatrix, ignore_zeros: bool) -> Vec<usize> {
    m.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| !ignore_zeros || **v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Number of distinct values among `indices`.
pub(crate) fn distinct_count(m: &DenseMatrix, indices: &[usize]) -> usize {
    let mut vals: Vec<u32> = indices.iter().map(|&i| m.as_slice()[i].to_bits()).collect();
    vals.sort_unstable();
    vals.dedup();
    vals.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parse_roundtrip() {
        for m in [Method::Cws, Method::Pws, Method::Uq, Method::Ecsq] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("kmeans".parse::<Method>().is_err());
    }

    #[test]
    fn from_values_marks_excluded() {
        let m = DenseMatrix::new(1, 4, vec![0.0, 2.0, 0.0, -1.0]).unwrap();
        let cb = Codebook::from_values(&m, |i| m.as_slice()[i] == 0.0, Method::Uq);
        assert_eq!(cb.centers, vec![-1.0, 2.0]);
        assert_eq!(cb.assignments, vec![PRUNED, 1, PRUNED, 0]);
        assert!(cb.reconstruct().unwrap().bit_eq(&m));
        cb.validate().unwrap();
    }

    #[test]
    fn validate_catches_bad_index() {
        let cb = Codebook {
            centers: vec![1.0],
            assignments: vec![0, 1],
            method: Method::Cws,
            rows: 1,
            cols: 2,
        };
        assert!(cb.validate().is_err());
    }
}
