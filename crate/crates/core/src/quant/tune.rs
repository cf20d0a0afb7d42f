//! Search for UQ / ECSQ settings that yield a requested number of levels.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::Rng;

use super::eligible_indices;
use super::lloyd::{quantize_ecsq, EcsqConfig};
use super::uq::UqConfig;

const MAX_BISECTIONS: usize = 64;
const MAX_DOUBLINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMethod {
    Uq,
    Ecsq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TunedConfig {
    Uq(UqConfig),
    /// ECSQ settings plus the seed the level count was measured with.
    Ecsq(EcsqConfig, u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub config: TunedConfig,
    pub achieved_k: usize,
    /// `achieved_k - k`.
    pub gap: isize,
    pub exact: bool,
}

/// Finds a configuration whose quantization has exactly `k` distinct levels,
/// or the closest count reachable within the search budget (`exact == false`).
///
/// UQ bisects the interval size on a log scale with the grid aligned to the
/// smallest eligible value, keeping the largest interval that still yields at
/// least `k` levels. ECSQ starts from `min(2k, distinct)` levels and bisects
/// the Lagrange multiplier.
pub fn tune_to_k(method: TuneMethod, m: &DenseMatrix, k: usize, seed: u64, ignore_zeros: bool) -> Result<TuneResult> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("target k must be >= 2, got {k}")));
    }
    let data = m.as_slice();
    let mut distinct: Vec<f32> = eligible_indices(m, ignore_zeros).iter().map(|&i| data[i]).collect();
    distinct.sort_by(f32::total_cmp);
    distinct.dedup_by(|a, b| a.to_bits() == b.to_bits());
    if distinct.is_empty() {
        return Err(Error::InsufficientDistinctValues { needed: k, found: 0 });
    }
    match method {
        TuneMethod::Uq => Ok(tune_uq(&distinct, m, k, ignore_zeros)),
        TuneMethod::Ecsq => tune_ecsq(&distinct, m, k, seed, ignore_zeros),
    }
}

fn result(config: TunedConfig, achieved_k: usize, k: usize) -> TuneResult {
    TuneResult {
        config,
        achieved_k,
        gap: achieved_k as isize - k as isize,
        exact: achieved_k == k,
    }
}

/// Bias placing a grid point on `anchor`, reduced into `[-delta/2, delta/2]`.
fn aligned_bias(delta: f64, anchor: f64) -> f64 {
    let mut d = (-anchor).rem_euclid(delta);
    if d > delta / 2.0 {
        d -= delta;
    }
    d.clamp(-delta / 2.0, delta / 2.0)
}

fn uq_config(delta: f64, anchor: f64) -> UqConfig {
    UqConfig {
        delta,
        d: aligned_bias(delta, anchor),
    }
}

/// Distinct outputs over sorted distinct inputs; the map is monotone so a
/// run-length count suffices.
fn uq_levels(distinct: &[f32], cfg: &UqConfig) -> usize {
    let mut count = 0;
    let mut last: Option<u32> = None;
    for &v in distinct {
        let q = cfg.apply(v).to_bits();
        if last != Some(q) {
            count += 1;
            last = Some(q);
        }
    }
    count
}

fn uq_mse(m: &DenseMatrix, cfg: &UqConfig, ignore_zeros: bool) -> f64 {
    m.as_slice()
        .iter()
        .filter(|v| !ignore_zeros || **v != 0.0)
        .map(|&v| (cfg.apply(v) as f64 - v as f64).powi(2))
        .sum()
}

fn tune_uq(distinct: &[f32], m: &DenseMatrix, k: usize, ignore_zeros: bool) -> TuneResult {
    let anchor = distinct[0] as f64;
    let range = distinct[distinct.len() - 1] as f64 - anchor;
    let min_gap = distinct
        .windows(2)
        .map(|w| w[1] as f64 - w[0] as f64)
        .fold(f64::INFINITY, f64::min);
    if distinct.len() == 1 {
        let cfg = uq_config(1.0, anchor);
        return result(TunedConfig::Uq(cfg), uq_levels(distinct, &cfg), k);
    }
    if k > distinct.len() {
        // Steps below half the smallest gap keep every value on its own level.
        let cfg = uq_config(min_gap / 2.0, anchor);
        return result(TunedConfig::Uq(cfg), uq_levels(distinct, &cfg), k);
    }

    let mut lo = min_gap / 2.0;
    let mut hi = 2.5 * range;
    let mut best = (uq_config(lo, anchor), uq_levels(distinct, &uq_config(lo, anchor)));
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let cfg = uq_config(mid, anchor);
        let levels = uq_levels(distinct, &cfg);
        if levels >= k {
            lo = mid;
        } else {
            hi = mid;
        }
        let closer = levels.abs_diff(k) < best.1.abs_diff(k);
        let same_but_coarser = levels.abs_diff(k) == best.1.abs_diff(k) && mid > best.0.delta;
        if closer || same_but_coarser {
            best = (cfg, levels);
        }
    }

    // A grid at the smallest gap reproduces evenly spaced data exactly; prefer
    // it over the coarser bisection result when both hit k.
    let grid = uq_config(min_gap, anchor);
    if uq_levels(distinct, &grid) == k
        && (best.1 != k || uq_mse(m, &grid, ignore_zeros) < uq_mse(m, &best.0, ignore_zeros))
    {
        best = (grid, k);
    }
    result(TunedConfig::Uq(best.0), best.1, k)
}

fn ecsq_levels(m: &DenseMatrix, cfg: &EcsqConfig, seed: u64, ignore_zeros: bool) -> Result<usize> {
    Ok(quantize_ecsq(m, cfg, &mut Rng::new(seed), ignore_zeros)?.codebook.k())
}

fn tune_ecsq(distinct: &[f32], m: &DenseMatrix, k: usize, seed: u64, ignore_zeros: bool) -> Result<TuneResult> {
    if k >= distinct.len() {
        let cfg = EcsqConfig::new(0.0, distinct.len());
        let levels = ecsq_levels(m, &cfg, seed, ignore_zeros)?;
        return Ok(result(TunedConfig::Ecsq(cfg, seed), levels, k));
    }
    let start = (2 * k).min(distinct.len());
    let at = |lambda: f64| EcsqConfig::new(lambda, start);

    let mut best = (at(0.0), ecsq_levels(m, &at(0.0), seed, ignore_zeros)?);
    if best.1 == k {
        return Ok(result(TunedConfig::Ecsq(best.0, seed), k, k));
    }

    let mean = distinct.iter().map(|&v| v as f64).sum::<f64>() / distinct.len() as f64;
    let var = distinct.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / distinct.len() as f64;
    let mut lo = 0.0;
    let mut hi = if var > 0.0 { var } else { 1.0 };
    let track = |cfg: EcsqConfig, levels: usize, best: &mut (EcsqConfig, usize)| {
        if levels.abs_diff(k) < best.1.abs_diff(k) {
            *best = (cfg, levels);
        }
    };

    let mut found_hi = false;
    for _ in 0..MAX_DOUBLINGS {
        let levels = ecsq_levels(m, &at(hi), seed, ignore_zeros)?;
        track(at(hi), levels, &mut best);
        if levels == k {
            return Ok(result(TunedConfig::Ecsq(at(hi), seed), k, k));
        }
        if levels < k {
            found_hi = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if found_hi {
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let levels = ecsq_levels(m, &at(mid), seed, ignore_zeros)?;
            track(at(mid), levels, &mut best);
            if levels == k {
                break;
            }
            if levels > k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(result(TunedConfig::Ecsq(best.0, seed), best.1, k))
}
