use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::Rng;

use super::{eligible_indices, Codebook, Method, QuantDiagnostics, Quantized};

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interval extremes at the `i/k` quantiles, `i = 0..=k`, rounded to f32.
pub(crate) fn pws_boundaries(values: &[f32], k: usize) -> Vec<f32> {
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    (0..=k)
        .map(|i| {
            if i == 0 {
                sorted[0] as f32
            } else if i == k {
                sorted[sorted.len() - 1] as f32
            } else {
                quantile(&sorted, i as f64 / k as f64) as f32
            }
        })
        .collect()
}

/// Maps `w` to the lower or upper extreme of its interval so that the
/// expected output equals `w`. Intervals are closed on the left; the last one
/// is closed on both sides.
pub(crate) fn pws_sample(bounds: &[f32], w: f32, u: f64) -> f32 {
    let k = bounds.len() - 1;
    let i = bounds[..k].partition_point(|&b| b <= w).max(1) - 1;
    let (lo, hi) = (bounds[i], bounds[i + 1]);
    if w <= lo || hi <= lo {
        return lo;
    }
    if w >= hi {
        return hi;
    }
    let p_lower = (hi as f64 - w as f64) / (hi as f64 - lo as f64);
    if u < p_lower {
        lo
    } else {
        hi
    }
}

/// Probabilistic weight sharing over `k` quantile intervals. One uniform
/// draw is consumed per eligible entry, in row-major order.
pub fn quantize_pws(m: &DenseMatrix, k: usize, rng: &mut Rng, ignore_zeros: bool) -> Result<Quantized> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("PWS needs k >= 2, got {k}")));
    }
    let data = m.as_slice();
    let eligible = eligible_indices(m, ignore_zeros);
    let mut out = data.to_vec();
    if !eligible.is_empty() {
        let values: Vec<f32> = eligible.iter().map(|&i| data[i]).collect();
        let bounds = pws_boundaries(&values, k);
        for &i in &eligible {
            let u = rng.next_f64();
            out[i] = pws_sample(&bounds, data[i], u);
        }
    }
    let matrix = DenseMatrix::new(m.rows(), m.cols(), out)?;
    let codebook = Codebook::from_values(&matrix, |i| ignore_zeros && data[i] == 0.0, Method::Pws);
    Ok(Quantized {
        matrix,
        codebook,
        diagnostics: QuantDiagnostics {
            iterations: 1,
            converged: true,
            cost_history: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_always_maps_to_itself() {
        let m = DenseMatrix::new(1, 5, vec![-1.0, 0.3, 0.7, 2.0, 5.0]).unwrap();
        for seed in 0..200 {
            let q = quantize_pws(&m, 2, &mut Rng::new(seed), false).unwrap();
            assert_eq!(q.matrix.as_slice()[0], -1.0);
            assert_eq!(q.matrix.as_slice()[4], 5.0);
        }
    }

    #[test]
    fn midpoint_is_a_fair_coin() {
        // Quantiles of {0, 0.25, 0.75, 1} at 0, 1/2, 1 are 0, 0.5, 1, so 0.25
        // sits at the middle of [0, 0.5).
        let m = DenseMatrix::new(1, 4, vec![0.0, 0.25, 0.75, 1.0]).unwrap();
        assert_eq!(pws_boundaries(m.as_slice(), 2), vec![0.0, 0.5, 1.0]);
        let draws = 100_000u32;
        let mut upper = 0u32;
        for seed in 0..draws {
            let q = quantize_pws(&m, 2, &mut Rng::new(seed as u64), false).unwrap();
            match q.matrix.as_slice()[1] {
                0.5 => upper += 1,
                v => assert_eq!(v, 0.0),
            }
        }
        let freq = upper as f64 / draws as f64;
        let sigma = (0.25 / draws as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn values_on_boundaries_are_fixed() {
        let bounds = [0.0f32, 1.0, 2.0, 4.0];
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(pws_sample(&bounds, 1.0, u), 1.0);
            assert_eq!(pws_sample(&bounds, 4.0, u), 4.0);
            assert_eq!(pws_sample(&bounds, 0.0, u), 0.0);
        }
        assert_eq!(pws_sample(&bounds, 3.0, 0.49), 2.0);
        assert_eq!(pws_sample(&bounds, 3.0, 0.51), 4.0);
    }

    #[test]
    fn degenerate_interval_is_deterministic() {
        let bounds = [1.0f32, 1.0, 1.0];
        assert_eq!(pws_sample(&bounds, 1.0, 0.7), 1.0);
        let m = DenseMatrix::new(1, 3, vec![2.0; 3]).unwrap();
        let q = quantize_pws(&m, 4, &mut Rng::new(0), false).unwrap();
        assert!(q.matrix.bit_eq(&m));
    }

    #[test]
    fn at_most_k_plus_one_centers() {
        let mut rng = Rng::new(8);
        let data: Vec<f32> = (0..1000).map(|_| rng.uniform(-1.0, 1.0) as f32).collect();
        let m = DenseMatrix::new(10, 100, data).unwrap();
        for k in [2, 3, 8, 32] {
            let q = quantize_pws(&m, k, &mut Rng::new(k as u64), false).unwrap();
            assert!(q.codebook.k() <= k + 1);
            assert!(q.codebook.reconstruct().unwrap().bit_eq(&q.matrix));
        }
    }

    #[test]
    fn rejects_k_below_two() {
        let m = DenseMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(quantize_pws(&m, 1, &mut Rng::new(0), false).is_err());
    }

    #[test]
    fn ignore_zeros_keeps_pruned_entries() {
        let m = DenseMatrix::new(1, 6, vec![0.0, 0.2, 0.0, 0.9, -0.4, 0.0]).unwrap();
        let q = quantize_pws(&m, 2, &mut Rng::new(1), true).unwrap();
        for i in [0, 2, 5] {
            assert_eq!(q.matrix.as_slice()[i], 0.0);
            assert_eq!(q.codebook.assignments[i], super::super::PRUNED);
        }
    }
}
