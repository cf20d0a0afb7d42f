use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::{Codebook, Method, QuantDiagnostics, Quantized};

/// Uniform grid: `w = delta * round((w0 + d) / delta) - d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UqConfig {
    pub delta: f64,
    pub d: f64,
}

impl UqConfig {
    pub fn new(delta: f64, d: f64) -> Result<Self> {
        let cfg = Self { delta, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta must be finite and > 0, got {}",
                self.delta
            )));
        }
        if self.d.is_nan() || self.d.abs() > self.delta / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "bias d={} outside [-delta/2, delta/2]",
                self.d
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, w: f32) -> f32 {
        (self.delta * round_half_even((w as f64 + self.d) / self.delta) - self.d) as f32
    }
}

/// Round half to even, the rounding rule used by every UQ evaluation.
#[inline]
pub fn round_half_even(x: f64) -> f64 {
    x.round_ties_even()
}

pub fn quantize_uq(m: &DenseMatrix, cfg: &UqConfig, ignore_zeros: bool) -> Result<Quantized> {
    cfg.validate()?;
    let matrix = m.map(|w| if ignore_zeros && w == 0.0 { 0.0 } else { cfg.apply(w) })?;
    let data = m.as_slice();
    let codebook = Codebook::from_values(&matrix, |i| ignore_zeros && data[i] == 0.0, Method::Uq);
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
