use crate::error::{Error, Result};
use crate::matrix::WordSize;

use super::HuffmanCode;

/// Concatenated codewords packed MSB-first into `b`-bit words. Bits past
/// `bit_len` in the last word are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    /// Each entry holds one `b`-bit word in its low bits.
    words: Vec<u64>,
    bit_len: u64,
    word: WordSize,
}

impl BitStream {
    pub fn empty(word: WordSize) -> Self {
        Self {
            words: Vec::new(),
            bit_len: 0,
            word,
        }
    }

    /// Wraps raw words, checking the word count and zero padding.
    pub fn from_words(words: Vec<u64>, bit_len: u64, word: WordSize) -> Result<Self> {
        let b = word.bits() as u64;
        let expected = bit_len.div_ceil(b);
        if words.len() as u64 != expected {
            return Err(Error::CorruptStream {
                bit: bit_len,
                reason: format!("expected {expected} words for {bit_len} bits, found {}", words.len()),
            });
        }
        if b == 32 {
            if let Some(i) = words.iter().position(|w| w >> 32 != 0) {
                return Err(Error::CorruptStream {
                    bit: i as u64 * 32,
                    reason: "32-bit word has high bits set".into(),
                });
            }
        }
        let used = bit_len % b;
        if used != 0 {
            let last = *words.last().unwrap();
            if last & ((1u64 << (b - used)) - 1) != 0 {
                return Err(Error::CorruptStream {
                    bit: bit_len,
                    reason: "non-zero padding after the last codeword".into(),
                });
            }
        }
        Ok(Self { words, bit_len, word })
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Number of memory words `N = ceil(bit_len / b)`.
    #[inline]
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    #[inline]
    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    #[inline]
    pub fn word_size(&self) -> WordSize {
        self.word
    }

    /// Storage actually occupied, padding included.
    pub fn stored_bits(&self) -> u64 {
        self.words.len() as u64 * self.word.bits() as u64
    }

    #[inline]
    pub fn bit(&self, pos: u64) -> u32 {
        let b = self.word.bits() as u64;
        ((self.words[(pos / b) as usize] >> (b - 1 - pos % b)) & 1) as u32
    }
}

/// Appends codewords MSB-first.
#[derive(Debug)]
pub struct BitWriter {
    words: Vec<u64>,
    acc: u64,
    used: u32,
    bit_len: u64,
    word: WordSize,
}

impl BitWriter {
    pub fn new(word: WordSize) -> Self {
        Self {
            words: Vec::new(),
            acc: 0,
            used: 0,
            bit_len: 0,
            word,
        }
    }

    /// Appends the low `len` bits of `code`, most significant first.
    pub fn push(&mut self, code: u64, len: u32) {
        debug_assert!(len <= 64);
        let b = self.word.bits();
        let mut left = len;
        while left > 0 {
            let room = b - self.used;
            let take = room.min(left);
            let chunk = (code >> (left - take)) & mask(take);
            self.acc |= chunk << (room - take);
            self.used += take;
            left -= take;
            if self.used == b {
                self.words.push(self.acc);
                self.acc = 0;
                self.used = 0;
            }
        }
        self.bit_len += len as u64;
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn finish(mut self) -> BitStream {
        if self.used > 0 {
            self.words.push(self.acc);
        }
        BitStream {
            words: self.words,
            bit_len: self.bit_len,
            word: self.word,
        }
    }
}

#[inline]
fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Encodes `values` by concatenating their codewords.
pub fn encode(values: impl IntoIterator<Item = f32>, code: &HuffmanCode, b: WordSize) -> Result<BitStream> {
    let mut w = BitWriter::new(b);
    for v in values {
        let (cw, len) = code.lookup(v)?;
        w.push(cw, len);
    }
    Ok(w.finish())
}
