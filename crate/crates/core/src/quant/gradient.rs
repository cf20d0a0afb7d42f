use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::{Codebook, PRUNED};

/// Cumulative gradient per shared weight: component `l` sums the gradient
/// entries whose weight is assigned to center `l`. Pruned entries are skipped.
pub fn aggregate_gradient(grad: &DenseMatrix, cb: &Codebook) -> Result<Vec<f64>> {
    if grad.rows() != cb.rows || grad.cols() != cb.cols {
        return Err(Error::DimensionMismatch {
            expected: cb.rows * cb.cols,
            actual: grad.len(),
        });
    }
    cb.validate()?;
    let mut out = vec![0.0f64; cb.k()];
    for (&g, &a) in grad.as_slice().iter().zip(&cb.assignments) {
        if a != PRUNED {
            out[a as usize] += g as f64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::Method;

    fn codebook(assignments: Vec<u32>, k: usize, rows: usize, cols: usize) -> Codebook {
        Codebook {
            centers: (0..k).map(|i| i as f32).collect(),
            assignments,
            method: Method::Cws,
            rows,
            cols,
        }
    }

    #[test]
    fn hand_sum() {
        let g = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let cb = codebook(vec![0, 1, 0, 1], 2, 2, 2);
        assert_eq!(aggregate_gradient(&g, &cb).unwrap(), vec![4.0, 6.0]);
    }

    #[test]
    fn single_center_collects_everything() {
        let g = DenseMatrix::from_rows(&[vec![1.5, -2.0], vec![3.0, 0.25]]).unwrap();
        let cb = codebook(vec![0; 4], 3, 2, 2);
        assert_eq!(aggregate_gradient(&g, &cb).unwrap(), vec![2.75, 0.0, 0.0]);
    }

    #[test]
    fn zero_gradient_and_pruned() {
        let g = DenseMatrix::zeros(2, 2).unwrap();
        let cb = codebook(vec![0, 1, PRUNED, 1], 2, 2, 2);
        assert_eq!(aggregate_gradient(&g, &cb).unwrap(), vec![0.0, 0.0]);

        let g = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![100.0, 1.0]]).unwrap();
        assert_eq!(aggregate_gradient(&g, &cb).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        let g = DenseMatrix::zeros(1, 4).unwrap();
        let cb = codebook(vec![0; 4], 1, 2, 2);
        assert!(aggregate_gradient(&g, &cb).is_err());
    }
}
