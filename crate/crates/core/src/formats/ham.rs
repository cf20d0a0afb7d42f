use crate::error::{Error, Result};
use crate::huffman::{build_code, dict_bits, encode, BitStream, Decoder, HuffmanCode, SymbolTable};
use crate::matrix::{DenseMatrix, WordSize};

/// Huffman address map: every entry, zeros included, coded in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct HamMatrix {
    n: usize,
    m: usize,
    pub(crate) code: HuffmanCode,
    pub(crate) stream: BitStream,
}

impl HamMatrix {
    /// Assembles a loaded code and stream. The stream is decoded once to check
    /// that it holds exactly `n m` codewords; the code's counts are refreshed
    /// from that pass.
    pub fn from_parts(n: usize, m: usize, mut code: HuffmanCode, stream: BitStream) -> Result<Self> {
        let total = n
            .checked_mul(m)
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidMatrix(format!("bad dimensions {n}x{m}")))?;
        let mut counts = vec![0u64; code.len()];
        let mut dec = Decoder::new(&stream, &code);
        let mut seen = 0usize;
        while let Some(i) = dec.next_index()? {
            seen += 1;
            if seen > total {
                return Err(Error::CorruptStream {
                    bit: dec.cursor().pos,
                    reason: format!("more than {total} codewords"),
                });
            }
            counts[i as usize] += 1;
        }
        if seen != total {
            return Err(Error::CorruptStream {
                bit: stream.bit_len(),
                reason: format!("expected {total} codewords, found {seen}"),
            });
        }
        code.set_counts(counts);
        Ok(Self { n, m, code, stream })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn code(&self) -> &HuffmanCode {
        &self.code
    }

    pub fn stream(&self) -> &BitStream {
        &self.stream
    }

    /// Distinct values, zero included when present.
    pub fn k(&self) -> usize {
        self.code.len()
    }

    /// Stream bits plus the `6kb` dictionary charge. Padding in the last
    /// word is not counted.
    pub fn accounted_bits(&self) -> u64 {
        self.stream.bit_len() + dict_bits(&self.code, self.stream.word_size())
    }
}

pub fn to_ham(m: &DenseMatrix, b: WordSize) -> Result<HamMatrix> {
    let code = build_code(&SymbolTable::from_values(m.as_slice().iter().copied()))?;
    let stream = encode(m.column_order(), &code, b)?;
    Ok(HamMatrix {
        n: m.rows(),
        m: m.cols(),
        code,
        stream,
    })
}

pub fn from_ham(h: &HamMatrix) -> Result<DenseMatrix> {
    let total = h.n * h.m;
    let mut cols = crate::matrix::try_zeroed(total)?;
    cols.clear();
    for v in Decoder::new(&h.stream, &h.code) {
        cols.push(v?);
        if cols.len() > total {
            break;
        }
    }
    if cols.len() != total {
        return Err(Error::CorruptStream {
            bit: h.stream.bit_len(),
            reason: format!("expected {total} codewords, found {}", cols.len()),
        });
    }
    DenseMatrix::from_column_major(h.n, h.m, &cols)
}
