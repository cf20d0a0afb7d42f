//! Huffman coding over `f32` symbols: frequency tables, canonical code
//! construction, MSB-first bit packing into fixed-width words, and the
//! next-codeword scanner used by the compressed dot products.

mod bitstream;
mod code;
mod decode;

pub use bitstream::{encode, BitStream, BitWriter};
pub use code::{build_code, dict_bits, HuffmanCode, MAX_CODE_LEN};
pub use decode::{decode_all, ncw, Cursor, Decoder, Ncw};

/// Distinct symbols (sorted by `f32::total_cmp`) with occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    symbols: Vec<f32>,
    counts: Vec<u64>,
}

impl SymbolTable {
    pub fn from_values(values: impl IntoIterator<Item = f32>) -> Self {
        let mut all: Vec<f32> = values.into_iter().collect();
        all.sort_unstable_by(f32::total_cmp);
        let mut symbols = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for v in all {
            match symbols.last() {
                Some(last) if f32::to_bits(*last) == v.to_bits() => {
                    *counts.last_mut().unwrap() += 1;
                }
                _ => {
                    symbols.push(v);
                    counts.push(1);
                }
            }
        }
        Self { symbols, counts }
    }

    /// Builds a table from explicit `(symbol, count)` pairs. Zero counts are
    /// dropped; duplicate symbols are merged.
    pub fn from_counts(pairs: impl IntoIterator<Item = (f32, u64)>) -> Self {
        let mut pairs: Vec<(f32, u64)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut symbols: Vec<f32> = Vec::with_capacity(pairs.len());
        let mut counts: Vec<u64> = Vec::with_capacity(pairs.len());
        for (s, c) in pairs {
            if symbols.last().map(|l| l.to_bits()) == Some(s.to_bits()) {
                *counts.last_mut().unwrap() += c;
            } else {
                symbols.push(s);
                counts.push(c);
            }
        }
        Self { symbols, counts }
    }

    pub fn symbols(&self) -> &[f32] {
        &self.symbols
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn index_of(&self, symbol: f32) -> Option<usize> {
        self.symbols.binary_search_by(|s| s.total_cmp(&symbol)).ok()
    }

    /// Source entropy in bits per symbol.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.counts)
    }
}

pub(crate) fn entropy_of(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum();
    // A single symbol gives -1 * log2(1) = -0.0.
    h.max(0.0)
}
