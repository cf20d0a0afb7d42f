//! One-dimensional Lloyd iteration shared by CWS (k-means) and ECSQ.
//!
//! Values are sorted once. In one dimension every decision region of the
//! cost `(w - c_i)^2 + a_i` is an interval, so an assignment step reduces to
//! a lower-envelope computation over the levels plus one binary search per
//! breakpoint. With all penalties `a_i` zero the breakpoints are exactly the
//! midpoints between neighbouring centers, i.e. plain k-means.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::parallel;
use crate::rng::Rng;

use super::{distinct_count, eligible_indices, Codebook, Method, QuantDiagnostics, Quantized, PRUNED};

pub const CWS_MAX_ITERS: usize = 300;
/// Relative improvement of the objective below which iteration stops.
pub const CWS_REL_TOL: f64 = 1e-6;

/// Entropy-constrained scalar quantizer settings.
///
/// `tol` is relative: iteration stops once an iteration lowers the Lagrange
/// cost by no more than `tol * cost`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcsqConfig {
    pub lambda: f64,
    pub k_target: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl EcsqConfig {
    pub fn new(lambda: f64, k_target: usize) -> Self {
        Self {
            lambda,
            k_target,
            max_iters: CWS_MAX_ITERS,
            tol: CWS_REL_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.k_target == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig("k_target and max_iters must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// k-means weight sharing. k-means++ seeding from `rng`, then Lloyd
/// iterations (at most [`CWS_MAX_ITERS`], relative tolerance
/// [`CWS_REL_TOL`]); clusters that empty out are re-seeded at the point
/// farthest from its center.
pub fn quantize_cws(m: &DenseMatrix, k: usize, rng: &mut Rng, ignore_zeros: bool) -> Result<Quantized> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    run(m, k, 0.0, CWS_MAX_ITERS, CWS_REL_TOL, rng, ignore_zeros, Method::Cws)
}

/// Entropy-constrained scalar quantization: alternating minimisation of
/// `D + lambda * H`, where levels that receive no values are dropped. With
/// `lambda == 0` this is exactly [`quantize_cws`] (same seeding, same
/// empty-cluster handling) when `max_iters` and `tol` match.
pub fn quantize_ecsq(m: &DenseMatrix, cfg: &EcsqConfig, rng: &mut Rng, ignore_zeros: bool) -> Result<Quantized> {
    cfg.validate()?;
    run(
        m,
        cfg.k_target,
        cfg.lambda,
        cfg.max_iters,
        cfg.tol,
        rng,
        ignore_zeros,
        Method::Ecsq,
    )
}

#[allow(clippy::too_many_arguments)]
fn run(
    m: &DenseMatrix,
    k: usize,
    lambda: f64,
    max_iters: usize,
    tol: f64,
    rng: &mut Rng,
    ignore_zeros: bool,
    method: Method,
) -> Result<Quantized> {
    let mut order = eligible_indices(m, ignore_zeros);
    let found = distinct_count(m, &order);
    if k > found {
        return Err(Error::InsufficientDistinctValues { needed: k, found });
    }
    let data = m.as_slice();
    order.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
    let xs: Vec<f64> = order.iter().map(|&i| data[i] as f64).collect();

    let init = kmeans_pp(&xs, k, rng);
    let outcome = lloyd(&xs, init, lambda, max_iters, tol);

    // f32 centers; neighbouring f64 centers may round to the same value.
    let mut centers: Vec<f32> = Vec::with_capacity(outcome.centers.len());
    let mut level_to_center = Vec::with_capacity(outcome.centers.len());
    for &c in &outcome.centers {
        let c = c as f32;
        if centers.last().map(|l: &f32| l.to_bits()) != Some(c.to_bits()) {
            centers.push(c);
        }
        level_to_center.push((centers.len() - 1) as u32);
    }

    let excluded = ignore_zeros;
    let mut assignments: Vec<u32> = if excluded {
        data.iter().map(|v| if *v == 0.0 { PRUNED } else { 0 }).collect()
    } else {
        vec![0; data.len()]
    };
    let mut values = data.to_vec();
    for (level, &(start, end)) in outcome.ranges.iter().enumerate() {
        let ci = level_to_center[level];
        for &orig in &order[start..end] {
            assignments[orig] = ci;
            values[orig] = centers[ci as usize];
        }
    }

    let matrix = DenseMatrix::new(m.rows(), m.cols(), values)?;
    Ok(Quantized {
        matrix,
        codebook: Codebook {
            centers,
            assignments,
            method,
            rows: m.rows(),
            cols: m.cols(),
        },
        diagnostics: outcome.diagnostics,
    })
}

/// k-means++ seeding over sorted values. Returns sorted, distinct centers.
pub(crate) fn kmeans_pp(xs: &[f64], k: usize, rng: &mut Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k);
    if xs.is_empty() || k == 0 {
        return centers;
    }
    let first = xs[rng.below(xs.len())];
    centers.push(first);
    let mut dist: Vec<(f64, f64)> = xs.iter().map(|&x| (x, (x - first) * (x - first))).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().map(|d| d.1).sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, d) in dist.iter().enumerate() {
            acc += d.1;
            if acc > target && d.1 > 0.0 {
                pick = Some(i);
                break;
            }
        }
        let pick = pick.unwrap_or_else(|| dist.iter().rposition(|d| d.1 > 0.0).expect("total > 0"));
        let c = xs[pick];
        centers.push(c);
        parallel::update_each(&mut dist, |d| {
            let nd = (d.0 - c) * (d.0 - c);
            if nd < d.1 {
                d.1 = nd;
            }
        });
    }
    centers.sort_by(f64::total_cmp);
    centers
}

pub(crate) struct LloydOutcome {
    /// Sorted level values.
    pub centers: Vec<f64>,
    /// Half-open range of sorted positions owned by each level.
    pub ranges: Vec<(usize, usize)>,
    pub diagnostics: QuantDiagnostics,
}

fn breakpoint(ci: f64, ai: f64, cj: f64, aj: f64) -> f64 {
    0.5 * (ci + cj) + (aj - ai) / (2.0 * (cj - ci))
}

/// Assigns every sorted value to the level minimising `(x - c)^2 + a`.
/// Ties go to the smaller center.
pub(crate) fn assign(xs: &[f64], centers: &[f64], penalties: &[f64]) -> Vec<(usize, usize)> {
    let mut hull: Vec<usize> = Vec::with_capacity(centers.len());
    'levels: for j in 0..centers.len() {
        while let Some(&t) = hull.last() {
            if centers[t] == centers[j] {
                if penalties[j] < penalties[t] {
                    hull.pop();
                    continue;
                }
                continue 'levels;
            }
            if hull.len() >= 2 {
                let s = hull[hull.len() - 2];
                let via_j = breakpoint(centers[s], penalties[s], centers[j], penalties[j]);
                let via_t = breakpoint(centers[s], penalties[s], centers[t], penalties[t]);
                if via_j <= via_t {
                    hull.pop();
                    continue;
                }
            }
            break;
        }
        hull.push(j);
    }

    let mut owned: Vec<Option<(usize, usize)>> = vec![None; centers.len()];
    let mut start = 0usize;
    for (h, &level) in hull.iter().enumerate() {
        let end = match hull.get(h + 1) {
            Some(&next) => {
                let bp = breakpoint(centers[level], penalties[level], centers[next], penalties[next]);
                start + xs[start..].partition_point(|&x| x <= bp)
            }
            None => xs.len(),
        };
        owned[level] = Some((start, end));
        start = end;
    }
    // Levels outside the envelope own an empty range at their neighbour.
    let mut last_end = 0;
    owned
        .into_iter()
        .map(|r| match r {
            Some(r) => {
                last_end = r.1;
                r
            }
            None => (last_end, last_end),
        })
        .collect()
}

fn is_empty(r: &(usize, usize)) -> bool {
    r.0 == r.1
}

/// Moves each empty level onto the value farthest from its current center.
fn reseed_empty(xs: &[f64], centers: &mut [f64], ranges: &mut Vec<(usize, usize)>) {
    let zeros = vec![0.0; centers.len()];
    for _ in 0..centers.len() {
        let Some(empty) = ranges.iter().position(is_empty) else {
            return;
        };
        let mut far = (0usize, -1.0f64);
        for (level, &(s, e)) in ranges.iter().enumerate() {
            for (off, &x) in xs[s..e].iter().enumerate() {
                let d = (x - centers[level]) * (x - centers[level]);
                if d > far.1 {
                    far = (s + off, d);
                }
            }
        }
        if far.1 <= 0.0 {
            return;
        }
        centers[empty] = xs[far.0];
        centers.sort_by(f64::total_cmp);
        *ranges = assign(xs, centers, &zeros[..centers.len()]);
    }
}

fn drop_empty(centers: &mut Vec<f64>, ranges: &mut Vec<(usize, usize)>) {
    let keep: Vec<bool> = ranges.iter().map(|r| !is_empty(r)).collect();
    let mut it = keep.iter();
    centers.retain(|_| *it.next().unwrap());
    ranges.retain(|r| !is_empty(r));
}

fn lagrange_cost(xs: &[f64], centers: &[f64], ranges: &[(usize, usize)], lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let mut total = 0.0;
    for (c, &(s, e)) in centers.iter().zip(ranges) {
        let mut sse = 0.0;
        for &x in &xs[s..e] {
            sse += (x - c) * (x - c);
        }
        total += sse;
        if lambda > 0.0 && e > s {
            let count = (e - s) as f64;
            total -= lambda * count * (count / n).log2();
        }
    }
    total / n
}

pub(crate) fn lloyd(xs: &[f64], init: Vec<f64>, lambda: f64, max_iters: usize, tol: f64) -> LloydOutcome {
    let n = xs.len();
    let mut centers = init;
    let mut penalties = vec![0.0; centers.len()];
    let mut ranges = assign(xs, &centers, &penalties);
    let mut accepted = (centers.clone(), ranges.clone());
    let mut diagnostics = QuantDiagnostics::default();
    if n == 0 {
        diagnostics.converged = true;
        return LloydOutcome {
            centers: Vec::new(),
            ranges: Vec::new(),
            diagnostics,
        };
    }

    for _ in 0..max_iters {
        if lambda == 0.0 {
            reseed_empty(xs, &mut centers, &mut ranges);
        } else {
            drop_empty(&mut centers, &mut ranges);
        }

        let updated: Vec<f64> = ranges
            .iter()
            .zip(&centers)
            .map(|(&(s, e), &c)| {
                if e > s {
                    xs[s..e].iter().sum::<f64>() / (e - s) as f64
                } else {
                    c
                }
            })
            .collect();
        let cost = lagrange_cost(xs, &updated, &ranges, lambda);

        if let Some(&prev) = diagnostics.cost_history.last() {
            if cost > prev {
                // Rounding noise only; keep the better state.
                diagnostics.converged = true;
                break;
            }
        }
        centers = updated;
        accepted = (centers.clone(), ranges.clone());
        diagnostics.iterations += 1;
        diagnostics.cost_history.push(cost);

        let hist = &diagnostics.cost_history;
        if hist.len() >= 2 && hist[hist.len() - 2] - cost <= tol * hist[hist.len() - 2].abs() {
            diagnostics.converged = true;
            break;
        }

        if lambda > 0.0 {
            penalties = ranges
                .iter()
                .map(|&(s, e)| -lambda * ((e - s) as f64 / n as f64).log2())
                .collect();
        } else {
            penalties = vec![0.0; centers.len()];
        }
        let next = assign(xs, &centers, &penalties);
        if next == ranges {
            diagnostics.converged = true;
            break;
        }
        ranges = next;
    }

    let (centers, ranges) = accepted;
    // Levels can only be empty here if the very first assignment left them so
    // and the loop never ran; drop them for a clean codebook.
    let (centers, ranges): (Vec<f64>, Vec<(usize, usize)>) =
        centers.into_iter().zip(ranges).filter(|(_, r)| !is_empty(r)).unzip();
    LloydOutcome {
        centers,
        ranges,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f32]) -> DenseMatrix {
        DenseMatrix::new(1, v.len(), v.to_vec()).unwrap()
    }

    /// Exhaustive search over contiguous 2-partitions of sorted values.
    fn best_two_partition(vals: &[f64]) -> (f64, f64) {
        let mut v = vals.to_vec();
        v.sort_by(f64::total_cmp);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for cut in 1..v.len() {
            let (a, b) = v.split_at(cut);
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let sse: f64 =
                a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
            if sse < best.0 {
                best = (sse, ma, mb);
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn cws_two_clusters_matches_exhaustive_oracle() {
        let m = row(&[0.0, 0.1, 10.0, 10.1]);
        let (lo, hi) = best_two_partition(&[0.0, 0.1f32 as f64, 10.0, 10.1f32 as f64]);
        let q = quantize_cws(&m, 2, &mut Rng::new(3), false).unwrap();
        assert_eq!(q.codebook.centers, vec![lo as f32, hi as f32]);
        assert!((q.codebook.centers[0] - 0.05).abs() < 1e-7);
        assert!((q.codebook.centers[1] - 10.05).abs() < 1e-6);
        let out = q.matrix.as_slice();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[2], out[3]);
        assert!(q.codebook.reconstruct().unwrap().bit_eq(&q.matrix));
    }

    #[test]
    fn cws_fixed_point_when_k_equals_distinct() {
        let m = DenseMatrix::new(2, 4, vec![0.5, -1.25, 3.0, 0.5, 3.0, 7.75, -1.25, 0.1]).unwrap();
        for seed in 0..20 {
            let q = quantize_cws(&m, 5, &mut Rng::new(seed), false).unwrap();
            assert!(q.matrix.bit_eq(&m), "seed {seed}");
            assert_eq!(q.codebook.k(), 5);
        }
    }

    #[test]
    fn cws_k1_is_mean() {
        let m = row(&[1.0, 2.0, 3.0, 6.0]);
        let q = quantize_cws(&m, 1, &mut Rng::new(0), false).unwrap();
        assert!(q.matrix.as_slice().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn cws_errors_on_too_many_clusters() {
        let m = row(&[1.0, 1.0, 2.0]);
        let err = quantize_cws(&m, 3, &mut Rng::new(0), false).unwrap_err();
        assert!(matches!(err, Error::InsufficientDistinctValues { needed: 3, found: 2 }));
        assert!(quantize_cws(&m, 0, &mut Rng::new(0), false).is_err());
    }

    #[test]
    fn cws_ignore_zeros_keeps_zeros() {
        let m = row(&[0.0, 1.0, 0.0, 1.1, 5.0, 5.2, 0.0]);
        let q = quantize_cws(&m, 2, &mut Rng::new(9), true).unwrap();
        for (a, b) in m.as_slice().iter().zip(q.matrix.as_slice()) {
            assert_eq!(*a == 0.0, *b == 0.0);
        }
        assert_eq!(q.codebook.assignments[0], PRUNED);
        assert!(q.codebook.reconstruct().unwrap().bit_eq(&q.matrix));
    }

    #[test]
    fn assign_with_zero_penalties_uses_midpoints() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let r = assign(&xs, &[0.5, 3.5], &[0.0, 0.0]);
        assert_eq!(r, vec![(0, 3), (3, 5)]);
        // Exactly on the midpoint goes left.
        let r = assign(&xs, &[1.0, 3.0], &[0.0, 0.0]);
        assert_eq!(r, vec![(0, 3), (3, 5)]);
    }

    #[test]
    fn assign_brute_force_agreement() {
        let mut rng = Rng::new(11);
        for _ in 0..200 {
            let mut xs: Vec<f64> = (0..40).map(|_| rng.uniform(-3.0, 3.0)).collect();
            xs.sort_by(f64::total_cmp);
            let mut cs: Vec<f64> = (0..5).map(|_| rng.uniform(-3.0, 3.0)).collect();
            cs.sort_by(f64::total_cmp);
            let pens: Vec<f64> = (0..5).map(|_| rng.uniform(0.0, 4.0)).collect();
            let ranges = assign(&xs, &cs, &pens);
            for (level, &(s, e)) in ranges.iter().enumerate() {
                for &x in &xs[s..e] {
                    let mine = (x - cs[level]).powi(2) + pens[level];
                    let best = cs
                        .iter()
                        .zip(&pens)
                        .map(|(c, a)| (x - c).powi(2) + a)
                        .fold(f64::INFINITY, f64::min);
                    assert!(mine <= best + 1e-9, "x={x} level={level}");
                }
            }
            let covered: usize = ranges.iter().map(|r| r.1 - r.0).sum();
            assert_eq!(covered, xs.len());
        }
    }

    #[test]
    fn ecsq_lambda_zero_matches_cws() {
        let mut rng = Rng::new(5);
        let data: Vec<f32> = (0..300).map(|_| rng.uniform(-1.0, 1.0) as f32).collect();
        let m = DenseMatrix::new(10, 30, data).unwrap();
        let cws = quantize_cws(&m, 8, &mut Rng::new(77), false).unwrap();
        let ecsq = quantize_ecsq(&m, &EcsqConfig::new(0.0, 8), &mut Rng::new(77), false).unwrap();
        assert!(cws.matrix.bit_eq(&ecsq.matrix));
        assert_eq!(cws.codebook.centers, ecsq.codebook.centers);
    }

    #[test]
    fn ecsq_two_clumps_small_lambda() {
        let clump_a = [1.0f32, 1.1, 0.9, 1.05, 0.95, 1.0];
        let clump_b = [8.0f32, 8.2, 7.9, 8.1, 7.8, 8.0];
        let all: Vec<f32> = clump_a.iter().chain(&clump_b).copied().collect();
        let (lo, hi) = best_two_partition(&all.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let m = row(&all);
        let q = quantize_ecsq(&m, &EcsqConfig::new(0.01, 2), &mut Rng::new(1), false).unwrap();
        assert_eq!(q.codebook.centers.len(), 2);
        assert!((q.codebook.centers[0] as f64 - lo).abs() < 1e-6);
        assert!((q.codebook.centers[1] as f64 - hi).abs() < 1e-6);
    }

    #[test]
    fn ecsq_large_lambda_collapses() {
        // 7 vs 5 values: the more populated level wins once lambda dominates.
        let vals = [0.0f32, 0.1, 0.2, 0.1, 0.0, 0.2, 0.1, 3.0, 3.1, 2.9, 3.0, 3.2];
        let m = row(&vals);
        // Oracle: compare the 1-level and best 2-level costs at this lambda.
        let xs: Vec<f64> = vals.iter().map(|&v| v as f64).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let one_level = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let lambda = 50.0;
        let (lo, hi) = best_two_partition(&xs);
        let two_level = (xs[..7].iter().map(|x| (x - lo).powi(2)).sum::<f64>()
            + xs[7..].iter().map(|x| (x - hi).powi(2)).sum::<f64>()
            - lambda * (7.0 * (7.0f64 / n).log2() + 5.0 * (5.0f64 / n).log2()))
            / n;
        assert!(one_level < two_level);

        let q = quantize_ecsq(&m, &EcsqConfig::new(lambda, 2), &mut Rng::new(4), false).unwrap();
        assert_eq!(q.codebook.centers.len(), 1);
        let h = crate::huffman::SymbolTable::from_values(q.matrix.as_slice().iter().copied()).entropy();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn ecsq_cost_non_increasing() {
        let mut rng = Rng::new(21);
        for trial in 0..30 {
            let data: Vec<f32> = (0..200).map(|_| rng.uniform(-2.0, 2.0).powi(3) as f32).collect();
            let m = DenseMatrix::new(10, 20, data).unwrap();
            let cfg = EcsqConfig {
                lambda: 0.05 * trial as f64,
                k_target: 12,
                max_iters: 100,
                tol: 1e-12,
            };
            let q = quantize_ecsq(&m, &cfg, &mut Rng::new(trial), false).unwrap();
            for w in q.diagnostics.cost_history.windows(2) {
                assert!(w[1] <= w[0], "trial {trial}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn ecsq_non_convergence_is_flagged() {
        let mut rng = Rng::new(2);
        let data: Vec<f32> = (0..500).map(|_| rng.uniform(-1.0, 1.0) as f32).collect();
        let m = DenseMatrix::new(1, 500, data).unwrap();
        let cfg = EcsqConfig {
            lambda: 0.001,
            k_target: 30,
            max_iters: 1,
            tol: 1e-15,
        };
        let q = quantize_ecsq(&m, &cfg, &mut Rng::new(0), false).unwrap();
        assert!(!q.diagnostics.converged);
        assert_eq!(q.diagnostics.iterations, 1);
    }

    #[test]
    fn ecsq_rejects_bad_config() {
        let m = row(&[1.0, 2.0]);
        let bad = EcsqConfig {
            lambda: -1.0,
            ..EcsqConfig::new(0.0, 1)
        };
        assert!(quantize_ecsq(&m, &bad, &mut Rng::new(0), false).is_err());
        let bad = EcsqConfig {
            tol: 0.0,
            ..EcsqConfig::new(0.0, 1)
        };
        assert!(quantize_ecsq(&m, &bad, &mut Rng::new(0), false).is_err());
    }

    #[test]
    fn kmeans_pp_picks_distinct_points() {
        let xs = [1.0, 1.0, 1.0, 2.0, 3.0];
        let c = kmeans_pp(&xs, 3, &mut Rng::new(0));
        assert_eq!(c, vec![1.0, 2.0, 3.0]);
    }
}
