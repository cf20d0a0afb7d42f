use serde::{Deserialize, Serialize};

use crate::matrix::{occupancy_ratio, WordSize};

use super::{index_width, Archive, CompressedMatrix, Format};

/// Which size theorem a bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    /// No value repeats (HAM) or every non-zero is distinct (sHAM).
    WorstCase,
    /// At most `k` distinct values.
    KDistinct,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Hypothesis::WorstCase => "worst-case",
            Hypothesis::KDistinct => "k-distinct",
        })
    }
}

/// Upper bound in bits on the accounted size of a HAM or sHAM matrix;
/// `None` for the other formats.
///
/// HAM, worst case: `nm(1 + log2 nm) + 6nm b`; HAM, k distinct:
/// `nm(1 + log2 k) + 6kb`. sHAM, worst case:
/// `snm(1 + log2 snm) + b(7snm + m + 1)`; sHAM, k distinct:
/// `snm(1 + log2 k) + b(6k + snm + m + 1)`. A stream term whose symbol
/// count is zero is taken as zero.
pub fn bound_bits(format: Format, n: usize, m: usize, s: f64, k: usize, b: WordSize, h: Hypothesis) -> Option<f64> {
    let nm = n as f64 * m as f64;
    let b = b.bits() as f64;
    let k = k as f64;
    let stream = |symbols: f64, alphabet: f64| {
        if symbols > 0.0 {
            symbols * (1.0 + alphabet.max(1.0).log2())
        } else {
            0.0
        }
    };
    match (format, h) {
        (Format::Ham, Hypothesis::WorstCase) => Some(stream(nm, nm) + 6.0 * nm * b),
        (Format::Ham, Hypothesis::KDistinct) => Some(stream(nm, k) + 6.0 * k * b),
        (Format::Sham, Hypothesis::WorstCase) => {
            let snm = s * nm;
            Some(stream(snm, snm) + b * (7.0 * snm + m as f64 + 1.0))
        }
        (Format::Sham, Hypothesis::KDistinct) => {
            let snm = s * nm;
            Some(stream(snm, k) + b * (6.0 * k + snm + m as f64 + 1.0))
        }
        _ => None,
    }
}

/// Non-zero ratio below which the k-distinct sHAM occupancy bound is smaller
/// than the HAM one, for the same `k`:
/// `((1 + log2 k)/b - (m + 1)/(nm)) / (1 + (1 + log2 k)/b)`.
pub fn crossover_s(k: usize, b: WordSize, n: usize, m: usize) -> f64 {
    let a = (1.0 + (k as f64).log2()) / b.bits() as f64;
    (a - (m as f64 + 1.0) / (n as f64 * m as f64)) / (1.0 + a)
}

/// Measured and theoretical size of one archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub format: Format,
    pub n: usize,
    pub m: usize,
    pub b: u32,
    /// Non-zero count.
    pub q: usize,
    pub s: f64,
    /// Distinct symbols the format stores: every value for HAM and the index
    /// map, non-zero values for sHAM and CSC.
    pub k: usize,
    /// Size under the word-level accounting of the bounds (Huffman streams
    /// counted to their exact bit length, dictionaries at `6kb`).
    pub actual_bits: u64,
    /// Ceiling of the theorem bound, for the two Huffman formats.
    pub bound_bits: Option<u64>,
    pub hypothesis: Option<Hypothesis>,
    pub psi_actual: f64,
    pub psi_bound: Option<f64>,
    /// Size of the serialized container, padding and header included.
    pub serialized_bits: u64,
    /// sHAM row indices as stored (`ceil(log2 n)` bits each) and as
    /// accounted (`b` bits each).
    pub ri_stored_bits: Option<u64>,
    pub ri_accounted_bits: Option<u64>,
}

impl SpaceReport {
    pub fn of(archive: &Archive) -> Self {
        let b = archive.word_size();
        let (n, m) = (archive.matrix().rows(), archive.matrix().cols());
        let nm = n * m;
        let mut ri_stored_bits = None;
        let mut ri_accounted_bits = None;
        let (q, k, actual_bits) = match archive.matrix() {
            CompressedMatrix::Ham(h) => {
                let zeros = h.code().index_of(0.0).map_or(0, |z| h.code().counts()[z]);
                (nm - zeros as usize, h.k(), h.accounted_bits())
            }
            CompressedMatrix::Sham(s) => {
                ri_stored_bits = Some(s.nnz() as u64 * index_width(n) as u64);
                ri_accounted_bits = Some(s.nnz() as u64 * b.bits() as u64);
                (s.nnz(), s.k(), s.accounted_bits())
            }
            CompressedMatrix::Csc(c) => {
                let mut v: Vec<u32> = c.nz().iter().map(|x| x.to_bits()).collect();
                v.sort_unstable();
                v.dedup();
                (c.nnz(), v.len(), c.accounted_bits(b))
            }
            CompressedMatrix::IndexMap(im) => {
                let zero = im.centers().iter().position(|c| *c == 0.0);
                let zeros = match zero {
                    Some(z) => (0..nm).filter(|&i| im.indices().get(i) == z).count(),
                    None => 0,
                };
                (nm - zeros, im.k(), im.accounted_bits(b))
            }
        };
        let s = q as f64 / nm as f64;
        let format = archive.format();
        let hypothesis = match format {
            Format::Ham if k < nm => Some(Hypothesis::KDistinct),
            Format::Sham if k < q => Some(Hypothesis::KDistinct),
            Format::Ham | Format::Sham => Some(Hypothesis::WorstCase),
            _ => None,
        };
        let bound = hypothesis.and_then(|h| bound_bits(format, n, m, s, k, b, h));
        Self {
            format,
            n,
            m,
            b: b.bits(),
            q,
            s,
            k,
            actual_bits,
            bound_bits: bound.map(|x| x.ceil() as u64),
            hypothesis,
            psi_actual: occupancy_ratio(actual_bits, n, m, b),
            psi_bound: bound.map(|x| x / (b.bits() as f64 * nm as f64)),
            serialized_bits: archive.to_bytes().len() as u64 * 8,
            ri_stored_bits,
            ri_accounted_bits,
        }
    }

    /// True when there is no bound or the accounted size is within it.
    pub fn within_bound(&self) -> bool {
        self.bound_bits.is_none_or(|bound| self.actual_bits <= bound)
    }

    /// Uncompressed size `b n m`.
    pub fn dense_bits(&self) -> u64 {
        self.b as u64 * (self.n * self.m) as u64
    }

    pub fn compression_ratio(&self) -> f64 {
        self.dense_bits() as f64 / self.actual_bits as f64
    }
}
