use proptest::prelude::*;
use sham_core::quant::{quantize_cws, quantize_pws, quantize_uq, UqConfig, PRUNED};
use sham_core::{DenseMatrix, Rng};

fn matrix() -> impl Strategy<Value = DenseMatrix> {
    (2usize..30, 2usize..30, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut rng = Rng::new(seed);
        DenseMatrix::new(n, m, (0..n * m).map(|_| rng.uniform(-1.0, 1.0) as f32).collect()).unwrap()
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

proptest! {
    /// Each PWS output is one of the two extremes bracketing the input.
    #[test]
    fn pws_rounds_to_an_adjacent_extreme(m in matrix(), k in 2usize..10, seed in any::<u64>()) {
        let q = quantize_pws(&m, k, &mut Rng::new(seed), false).unwrap();
        let mut sorted: Vec<f64> = m.as_slice().iter().map(|&v| v as f64).collect();
        sorted.sort_by(f64::total_cmp);
        let bounds: Vec<f32> = (0..=k).map(|i| quantile(&sorted, i as f64 / k as f64) as f32).collect();
        for (&w, &v) in m.as_slice().iter().zip(q.matrix.as_slice()) {
            let j = bounds[..k].partition_point(|&b| b <= w).max(1) - 1;
            prop_assert!(v == bounds[j] || v == bounds[j + 1], "w={} -> {} not in [{}, {}]", w, v, bounds[j], bounds[j + 1]);
        }
    }

    #[test]
    fn cws_assigns_every_entry_to_its_nearest_center(m in matrix(), k in 1usize..8, seed in any::<u64>()) {
        let q = quantize_cws(&m, k, &mut Rng::new(seed), false).unwrap();
        prop_assert!(q.codebook.k() <= k);
        for (&w, &a) in m.as_slice().iter().zip(&q.codebook.assignments) {
            prop_assert_ne!(a, PRUNED);
            let own = (w as f64 - q.codebook.centers[a as usize] as f64).abs();
            let best = q.codebook.centers.iter().map(|&c| (w as f64 - c as f64).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(own <= best + 1e-6, "w={} own={} best={}", w, own, best);
        }
        prop_assert!(q.codebook.reconstruct().unwrap().bit_eq(&q.matrix));
    }

    #[test]
    fn zeros_stay_zero_when_excluded(m in matrix(), k in 1usize..6, seed in any::<u64>()) {
        let sparse = m.map(|w| if w.abs() < 0.5 { 0.0 } else { w }).unwrap();
        prop_assume!(sparse.stats().k_nonzero() >= k);
        let q = quantize_cws(&sparse, k, &mut Rng::new(seed), true).unwrap();
        for (&w, &v) in sparse.as_slice().iter().zip(q.matrix.as_slice()) {
            prop_assert_eq!(w == 0.0, v == 0.0);
        }
    }

    #[test]
    fn uq_error_is_at_most_half_a_step(m in matrix(), delta in 0.01f64..1.0) {
        let cfg = UqConfig::new(delta, 0.0).unwrap();
        let q = quantize_uq(&m, &cfg, false).unwrap();
        for (&w, &v) in m.as_slice().iter().zip(q.matrix.as_slice()) {
            prop_assert!((w as f64 - v as f64).abs() <= delta / 2.0 + 1e-6);
        }
    }
}
