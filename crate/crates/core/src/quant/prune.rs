use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneConfig {
    /// Percentile level in `[0, 100)`.
    pub p: f64,
}

impl PruneConfig {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "pruning percentile must be in [0, 100), got {p}"
            )));
        }
        Ok(Self { p })
    }
}

/// Nearest-rank `p`-th percentile of the entry magnitudes.
pub fn percentile_threshold(m: &DenseMatrix, p: f64) -> f32 {
    let mut mags: Vec<f32> = m.as_slice().iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(f32::total_cmp);
    let rank = ((p / 100.0) * mags.len() as f64).ceil() as usize;
    mags[rank.clamp(1, mags.len()) - 1]
}

/// Magnitude pruning: keeps `w` when `|w| > w_p`, zeroes it otherwise.
/// Ties at the threshold are pruned.
pub fn prune(m: &DenseMatrix, cfg: &PruneConfig) -> Result<DenseMatrix> {
    let threshold = percentile_threshold(m, cfg.p);
    m.map(|w| if w.abs() > threshold { w } else { 0.0 })
}
