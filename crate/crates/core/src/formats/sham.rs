use crate::error::{Error, Result};
use crate::huffman::{build_code, dict_bits, encode, BitStream, Decoder, HuffmanCode, SymbolTable};
use crate::matrix::{DenseMatrix, WordSize};

use super::csc::{nonzero_structure, validate_structure};

/// Sparse Huffman address map: the non-zeros in column order are Huffman
/// coded, positions are kept in CSC-style `ri` / `cb` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ShamMatrix {
    n: usize,
    m: usize,
    /// `None` exactly when the matrix has no non-zeros.
    pub(crate) code: Option<HuffmanCode>,
    pub(crate) stream: BitStream,
    pub(crate) ri: Vec<u32>,
    pub(crate) cb: Vec<u32>,
}

impl ShamMatrix {
    /// Assembles loaded parts, validating the index vectors and checking that
    /// the stream holds exactly one codeword per stored position.
    pub fn from_parts(
        n: usize,
        m: usize,
        mut code: Option<HuffmanCode>,
        stream: BitStream,
        ri: Vec<u32>,
        cb: Vec<u32>,
    ) -> Result<Self> {
        validate_structure(n, m, &ri, &cb)?;
        let q = ri.len();
        match code.as_mut() {
            None => {
                if q != 0 || stream.bit_len() != 0 {
                    return Err(Error::CorruptStream {
                        bit: 0,
                        reason: "non-zeros present but no code".into(),
                    });
                }
            }
            Some(code) => {
                if code.symbols().contains(&0.0) {
                    return Err(Error::InvalidMatrix("zero must not be a coded symbol".into()));
                }
                let mut counts = vec![0u64; code.len()];
                let mut dec = Decoder::new(&stream, code);
                let mut seen = 0usize;
                while let Some(i) = dec.next_index()? {
                    seen += 1;
                    if seen > q {
                        break;
                    }
                    counts[i as usize] += 1;
                }
                if seen != q {
                    return Err(Error::CorruptStream {
                        bit: stream.bit_len(),
                        reason: format!("expected {q} codewords, found {seen}"),
                    });
                }
                code.set_counts(counts);
            }
        }
        Ok(Self {
            n,
            m,
            code,
            stream,
            ri,
            cb,
        })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn code(&self) -> Option<&HuffmanCode> {
        self.code.as_ref()
    }

    pub fn stream(&self) -> &BitStream {
        &self.stream
    }

    pub fn ri(&self) -> &[u32] {
        &self.ri
    }

    pub fn cb(&self) -> &[u32] {
        &self.cb
    }

    pub fn nnz(&self) -> usize {
        self.ri.len()
    }

    /// Distinct non-zero values.
    pub fn k(&self) -> usize {
        self.code.as_ref().map_or(0, HuffmanCode::len)
    }

    /// Stream bits, the `6kb` dictionary charge, and one word for every
    /// entry of `ri` and `cb`.
    pub fn accounted_bits(&self) -> u64 {
        let b = self.stream.word_size();
        let dict = self.code.as_ref().map_or(0, |c| dict_bits(c, b));
        self.stream.bit_len() + dict + b.bits() as u64 * (self.ri.len() + self.cb.len()) as u64
    }
}

pub fn to_sham(m: &DenseMatrix, b: WordSize) -> Result<ShamMatrix> {
    let (nz, ri, cb) = nonzero_structure(m);
    let (code, stream) = if nz.is_empty() {
        (None, BitStream::empty(b))
    } else {
        let code = build_code(&SymbolTable::from_values(nz.iter().copied()))?;
        let stream = encode(nz.iter().copied(), &code, b)?;
        (Some(code), stream)
    };
    Ok(ShamMatrix {
        n: m.rows(),
        m: m.cols(),
        code,
        stream,
        ri,
        cb,
    })
}

pub fn from_sham(s: &ShamMatrix) -> Result<DenseMatrix> {
    let mut data = crate::matrix::try_zeroed(s.n * s.m)?;
    if let Some(code) = &s.code {
        let mut dec = Decoder::new(&s.stream, code);
        for j in 0..s.m {
            for pos in s.cb[j] as usize..s.cb[j + 1] as usize {
                let v = dec.next().ok_or_else(|| Error::CorruptStream {
                    bit: s.stream.bit_len(),
                    reason: format!("stream ended before position {pos}"),
                })??;
                data[s.ri[pos] as usize * s.m + j] = v;
            }
        }
        if dec.next().is_some() {
            return Err(Error::CorruptStream {
                bit: dec.cursor().pos,
                reason: "codewords left after the last position".into(),
            });
        }
    }
    DenseMatrix::new(s.n, s.m, data)
}
