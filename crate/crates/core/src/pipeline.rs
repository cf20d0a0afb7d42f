//! Prune, quantize and encode chains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{crossover_s, Archive, Format, SpaceReport};
use crate::matrix::{DenseMatrix, WordSize};
use crate::quant::{
    prune, quantize_cws, quantize_ecsq, quantize_pws, quantize_uq, tune_to_k, Codebook, Method, PruneConfig,
    QuantDiagnostics, TuneMethod, TuneResult, TunedConfig,
};
use crate::rng::Rng;

/// Target format, or automatic choice between HAM and sHAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatChoice {
    Fixed(Format),
    Auto,
}

impl fmt::Display for FormatChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatChoice::Fixed(x) => x.fmt(f),
            FormatChoice::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for FormatChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            Ok(FormatChoice::Auto)
        } else {
            s.parse().map(FormatChoice::Fixed)
        }
    }
}

/// Quantizer with its target level count. UQ and ECSQ are tuned to reach
/// `k` levels; CWS and PWS take `k` directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantSpec {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSpec {
    pub prune: Option<PruneConfig>,
    pub quant: Option<QuantSpec>,
    pub format: FormatChoice,
    pub word: WordSize,
}

impl PipelineSpec {
    /// Lossless encoding only.
    pub fn lossless(format: FormatChoice, word: WordSize) -> Self {
        Self {
            prune: None,
            quant: None,
            format,
            word,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// The matrix the archive encodes: the input after pruning and
    /// quantization.
    pub matrix: DenseMatrix,
    pub codebook: Option<Codebook>,
    pub diagnostics: Option<QuantDiagnostics>,
    pub tuning: Option<TuneResult>,
    pub format: Format,
    pub archive: Archive,
    pub report: SpaceReport,
}

/// HAM or sHAM for `m`: sHAM when its non-zero ratio is below the
/// crossover for the number of distinct non-zero values.
pub fn choose_auto(m: &DenseMatrix, word: WordSize) -> Format {
    let st = m.stats();
    let k = st.k_nonzero().max(1);
    if st.s < crossover_s(k, word, m.rows(), m.cols()) {
        Format::Sham
    } else {
        Format::Ham
    }
}

/// Quantizes `m` per `spec`. `ignore_zeros` keeps zeros out of the
/// quantizer (used after pruning).
pub fn quantize(
    m: &DenseMatrix,
    spec: &QuantSpec,
    ignore_zeros: bool,
) -> Result<(crate::quant::Quantized, Option<TuneResult>)> {
    let mut rng = Rng::new(spec.seed);
    match spec.method {
        Method::Cws => Ok((quantize_cws(m, spec.k, &mut rng, ignore_zeros)?, None)),
        Method::Pws => Ok((quantize_pws(m, spec.k, &mut rng, ignore_zeros)?, None)),
        Method::Uq => {
            let t = tune_to_k(TuneMethod::Uq, m, spec.k, spec.seed, ignore_zeros)?;
            let TunedConfig::Uq(cfg) = t.config else {
                unreachable!("UQ tuning yields a UQ config")
            };
            Ok((quantize_uq(m, &cfg, ignore_zeros)?, Some(t)))
        }
        Method::Ecsq => {
            let t = tune_to_k(TuneMethod::Ecsq, m, spec.k, spec.seed, ignore_zeros)?;
            let TunedConfig::Ecsq(cfg, seed) = t.config else {
                unreachable!("ECSQ tuning yields an ECSQ config")
            };
            Ok((quantize_ecsq(m, &cfg, &mut Rng::new(seed), ignore_zeros)?, Some(t)))
        }
    }
}

pub fn run(input: &DenseMatrix, spec: &PipelineSpec) -> Result<PipelineOutput> {
    let pruned = match &spec.prune {
        Some(cfg) => Some(prune(input, cfg)?),
        None => None,
    };
    let base = pruned.as_ref().unwrap_or(input);
    let (matrix, codebook, diagnostics, tuning) = match &spec.quant {
        Some(q) => {
            let (out, tuning) = quantize(base, q, spec.prune.is_some())?;
            (out.matrix, Some(out.codebook), Some(out.diagnostics), tuning)
        }
        None => (base.clone(), None, None, None),
    };
    let format = match spec.format {
        FormatChoice::Fixed(f) => f,
        FormatChoice::Auto => choose_auto(&matrix, spec.word),
    };
    let archive = Archive::compress(&matrix, format, spec.word, codebook.as_ref())?;
    let report = archive.space_report();
    Ok(PipelineOutput {
        matrix,
        codebook,
        diagnostics,
        tuning,
        format,
        archive,
        report,
    })
}
