use crate::error::{Error, Result};

use super::{BitStream, HuffmanCode};

/// Decode position. `word` is the memory word the scanner is confined to;
/// bits of a codeword that straddles a word boundary are carried in
/// `pending` until the next word is opened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cursor {
    pub word: usize,
    /// Absolute bit position of the next unread bit.
    pub pos: u64,
    pending: u64,
    pending_len: u32,
}

impl Cursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bits of an unfinished codeword carried over from earlier words.
    pub fn pending_len(&self) -> u32 {
        self.pending_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ncw {
    /// A complete codeword; the payload is the symbol index.
    Symbol(u32),
    /// The current word ran out (possibly mid-codeword); move to the next.
    WordExhausted,
    /// All `bit_len` bits consumed; anything after is padding.
    End,
}

/// Next codeword within the cursor's current word.
#[inline]
pub fn ncw(stream: &BitStream, cursor: &mut Cursor, code: &HuffmanCode) -> Result<Ncw> {
    let bit_len = stream.bit_len();
    let b = stream.word_size().bits() as u64;
    let word_start = cursor.word as u64 * b;
    let word_end = (word_start + b).min(bit_len);
    if cursor.pos < word_start {
        cursor.pos = word_start;
    }
    while cursor.pos < word_end {
        let word = stream.words()[cursor.word];
        let bit = (word >> (b - 1 - (cursor.pos - word_start))) & 1;
        cursor.pending = (cursor.pending << 1) | bit;
        cursor.pending_len += 1;
        cursor.pos += 1;
        if let Some(sym) = code.match_code(cursor.pending, cursor.pending_len) {
            cursor.pending = 0;
            cursor.pending_len = 0;
            return Ok(Ncw::Symbol(sym));
        }
        if cursor.pending_len >= code.max_len() {
            return Err(Error::CorruptStream {
                bit: cursor.pos - cursor.pending_len as u64,
                reason: "bits match no codeword".into(),
            });
        }
    }
    if cursor.pos >= bit_len {
        if cursor.pending_len > 0 {
            return Err(Error::CorruptStream {
                bit: cursor.pos - cursor.pending_len as u64,
                reason: "stream ends inside a codeword".into(),
            });
        }
        return Ok(Ncw::End);
    }
    Ok(Ncw::WordExhausted)
}

/// Sequential symbol reader that advances across words on its own.
#[derive(Debug)]
pub struct Decoder<'a> {
    stream: &'a BitStream,
    code: &'a HuffmanCode,
    cursor: Cursor,
    done: bool,
}

impl<'a> Decoder<'a> {
    pub fn new(stream: &'a BitStream, code: &'a HuffmanCode) -> Self {
        Self {
            stream,
            code,
            cursor: Cursor::new(),
            done: false,
        }
    }

    pub fn cursor(&self) -> Cursor {
        self.cursor
    }

    /// Next symbol index, or `None` at end of stream.
    pub fn next_index(&mut self) -> Result<Option<u32>> {
        if self.done {
            return Ok(None);
        }
        loop {
            match ncw(self.stream, &mut self.cursor, self.code)? {
                Ncw::Symbol(s) => return Ok(Some(s)),
                Ncw::WordExhausted => self.cursor.word += 1,
                Ncw::End => {
                    self.done = true;
                    return Ok(None);
                }
            }
        }
    }
}

impl Iterator for Decoder<'_> {
    type Item = Result<f32>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_index() {
            Ok(Some(i)) => Some(Ok(self.code.symbol(i))),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn decode_all(stream: &BitStream, code: &HuffmanCode) -> Result<Vec<f32>> {
    Decoder::new(stream, code).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::huffman::{build_code, encode, BitWriter, SymbolTable};
    use crate::matrix::WordSize;

    fn three_symbol_code() -> HuffmanCode {
        // Lengths (2, 2, 1): 2.0 -> "0", 0.0 -> "10", 1.0 -> "11".
        build_code(&SymbolTable::from_counts([(0.0, 1), (1.0, 1), (2.0, 2)])).unwrap()
    }

    #[test]
    fn end_of_stream_at_bit_len() {
        let code = three_symbol_code();
        let s = encode([2.0, 2.0], &code, WordSize::W32).unwrap();
        let mut c = Cursor::new();
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::Symbol(2));
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::Symbol(2));
        // Padding is all zeros, which would decode as more "0" codewords.
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::End);
    }

    #[test]
    fn codeword_across_word_boundary() {
        // A 3-bit codeword starting at bit 30 of a 32-bit stream.
        let table = SymbolTable::from_counts([(1.0, 8), (2.0, 4), (3.0, 2), (4.0, 2)]);
        let code = build_code(&table).unwrap();
        let (one, one_len) = code.lookup(1.0).unwrap();
        let (three, three_len) = code.lookup(3.0).unwrap();
        assert_eq!((one_len, three_len), (1, 3));
        let mut w = BitWriter::new(WordSize::W32);
        for _ in 0..30 {
            w.push(one, one_len);
        }
        w.push(three, three_len);
        let s = w.finish();

        let mut c = Cursor::new();
        for _ in 0..30 {
            assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::Symbol(0));
        }
        assert_eq!(c.pos, 30);
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::WordExhausted);
        assert_eq!(c.pending_len(), 2);
        c.word += 1;
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::Symbol(2));
        assert_eq!(c.pos, 33);
        assert_eq!(ncw(&s, &mut c, &code).unwrap(), Ncw::End);
    }

    #[test]
    fn truncated_codeword_is_corrupt() {
        let code = three_symbol_code();
        // "1" alone is a prefix of both 2-bit codewords.
        let s = BitStream::from_words(vec![1u64 << 31], 1, WordSize::W32).unwrap();
        let err = decode_all(&s, &code).unwrap_err();
        assert!(err.is_corruption());
    }

    #[test]
    fn incomplete_code_detects_garbage() {
        // Lengths (1, 2) leave "11" unused.
        let code = HuffmanCode::from_lengths(vec![0.0, 1.0], vec![1, 2], vec![0, 0]).unwrap();
        let s = BitStream::from_words(vec![0b11u64 << 30], 2, WordSize::W32).unwrap();
        assert!(decode_all(&s, &code).unwrap_err().is_corruption());
    }

    #[test]
    fn round_trip_both_word_sizes() {
        let values: Vec<f32> = (0..1000).map(|i| ((i * 7919) % 13) as f32).collect();
        let code = build_code(&SymbolTable::from_values(values.iter().copied())).unwrap();
        for b in [WordSize::W32, WordSize::W64] {
            let s = encode(values.iter().copied(), &code, b).unwrap();
            assert_eq!(decode_all(&s, &code).unwrap(), values);
        }
    }

    #[test]
    fn example_matrix_column_order() {
        let m = crate::matrix::tests::example_matrix();
        let seq: Vec<f32> = m.column_order().collect();
        let code = build_code(&SymbolTable::from_values(seq.iter().copied())).unwrap();
        let s = encode(seq.iter().copied(), &code, WordSize::W32).unwrap();
        let back = decode_all(&s, &code).unwrap();
        assert_eq!(back.len(), 25);
        assert_eq!(back, seq);
    }
}
