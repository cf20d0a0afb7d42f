use crate::error::{Error, Result};
use crate::formats::{HamMatrix, ShamMatrix};
use crate::huffman::{ncw, Cursor, Decoder, Ncw};

use super::{check_dims, CompressedDot};

/// Streams the column-order address map one codeword at a time, holding a
/// single decoded weight plus the row, column and running-sum state.
pub fn dot_ham(x: &[f64], h: &HamMatrix) -> Result<Vec<f64>> {
    h.dot(x)
}

impl CompressedDot for HamMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        let (n, m) = self.shape();
        check_dims(x, out, n, m)?;
        let (stream, code) = (self.stream(), self.code());
        let (mut row, mut col) = (0usize, 0usize);
        let mut sum = 0.0f64;
        let mut cursor = Cursor::new();
        'words: for word in 0..stream.word_count() {
            cursor.word = word;
            loop {
                match ncw(stream, &mut cursor, code)? {
                    Ncw::Symbol(s) => {
                        if col == m {
                            return Err(Error::CorruptStream {
                                bit: cursor.pos,
                                reason: "codewords past the last column".into(),
                            });
                        }
                        sum += x[row] * code.symbol(s) as f64;
                        row += 1;
                        if row == n {
                            out[col] = sum;
                            sum = 0.0;
                            row = 0;
                            col += 1;
                        }
                    }
                    Ncw::WordExhausted => break,
                    Ncw::End => break 'words,
                }
            }
        }
        if col != m || row != 0 {
            return Err(Error::CorruptStream {
                bit: stream.bit_len(),
                reason: format!("stream ended at row {row} of column {col}"),
            });
        }
        Ok((n * m) as u64)
    }
}

/// Walks columns through `cb`, so empty columns cost no decoding; each
/// decoded non-zero is multiplied by `x[ri[pos]]`.
pub fn dot_sham(x: &[f64], s: &ShamMatrix) -> Result<Vec<f64>> {
    s.dot(x)
}

/// [`dot_sham`] plus the number of codewords decoded.
pub fn dot_sham_counted(x: &[f64], s: &ShamMatrix) -> Result<(Vec<f64>, u64)> {
    let r = s.dot_counted(x)?;
    Ok((r.out, r.flops))
}

impl CompressedDot for ShamMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn dot_into(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        check_dims(x, out, self.rows(), self.cols())?;
        let (ri, cb) = (self.ri(), self.cb());
        let Some(code) = self.code() else {
            out.fill(0.0);
            return Ok(0);
        };
        let mut dec = Decoder::new(self.stream(), code);
        let mut decoded = 0u64;
        for (j, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0f64;
            for pos in cb[j] as usize..cb[j + 1] as usize {
                let s = dec.next_index()?.ok_or_else(|| Error::CorruptStream {
                    bit: dec.cursor().pos,
                    reason: format!("stream ended before position {pos}"),
                })?;
                decoded += 1;
                sum += x[ri[pos] as usize] * code.symbol(s) as f64;
            }
            *o = sum;
        }
        Ok(decoded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{to_ham, to_sham};
    use crate::kernels::dot_dense;
    use crate::matrix::tests::example_matrix;
    use crate::matrix::{DenseMatrix, WordSize};
    use crate::rng::Rng;

    #[test]
    fn ham_unit_vector_selects_first_row() {
        let h = to_ham(&example_matrix(), WordSize::W32).unwrap();
        assert_eq!(
            dot_ham(&[1.0, 0.0, 0.0, 0.0, 0.0], &h).unwrap(),
            vec![1.0, 0.0, 4.0, 0.0, 0.0]
        );
    }

    #[test]
    fn ham_constant_matrix_is_scaled_sum() {
        let m = DenseMatrix::new(7, 3, vec![0.75; 21]).unwrap();
        let h = to_ham(&m, WordSize::W64).unwrap();
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let total: f64 = x.iter().sum();
        for v in dot_ham(&x, &h).unwrap() {
            assert!((v - 0.75 * total).abs() < 1e-12);
        }
    }

    #[test]
    fn sham_matches_oracle_on_example() {
        let m = example_matrix();
        let s = to_sham(&m, WordSize::W32).unwrap();
        let mut rng = Rng::new(11);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let (out, decoded) = dot_sham_counted(&x, &s).unwrap();
            assert_eq!(decoded, 7);
            assert_eq!(out, dot_dense(&x, &m).unwrap());
        }
    }

    #[test]
    fn sham_all_zero_and_empty_last_column() {
        let z = DenseMatrix::zeros(3, 4).unwrap();
        assert_eq!(
            dot_sham(&[1.0; 3], &to_sham(&z, WordSize::W32).unwrap()).unwrap(),
            vec![0.0; 4]
        );
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![3.0, 0.0, 0.0]]).unwrap();
        let s = to_sham(&m, WordSize::W32).unwrap();
        let x = [0.5, -2.0];
        let out = dot_sham(&x, &s).unwrap();
        assert_eq!(out, dot_dense(&x, &m).unwrap());
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let h = to_ham(&example_matrix(), WordSize::W32).unwrap();
        assert!(matches!(dot_ham(&[1.0; 6], &h), Err(Error::DimensionMismatch { .. })));
        let s = to_sham(&example_matrix(), WordSize::W32).unwrap();
        assert!(matches!(dot_sham(&[1.0; 2], &s), Err(Error::DimensionMismatch { .. })));
    }
}
