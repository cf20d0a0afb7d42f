use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::matrix::WordSize;

use super::{entropy_of, SymbolTable};

pub const MAX_CODE_LEN: u32 = 64;

/// Canonical prefix code over the symbols of a [`SymbolTable`].
///
/// Codewords are assigned in `(length, symbol order)` order, so the code is
/// fully determined by the per-symbol lengths. Decoding uses first-code /
/// offset tables indexed by length.
#[derive(Debug, Clone, PartialEq)]
pub struct HuffmanCode {
    symbols: Vec<f32>,
    lengths: Vec<u32>,
    codes: Vec<u64>,
    counts: Vec<u64>,
    /// Symbol indices sorted by `(length, index)`.
    canonical: Vec<u32>,
    /// Indexed by length `0..=max_len`.
    first_code: Vec<u64>,
    first_index: Vec<u32>,
    count_at_len: Vec<u32>,
    max_len: u32,
}

/// Builds an optimal prefix code. Two lowest-weight nodes are merged first,
/// ties broken by creation order (leaves in symbol order, then internal nodes
/// in merge order); the resulting lengths are then made canonical.
pub fn build_code(table: &SymbolTable) -> Result<HuffmanCode> {
    let k = table.len();
    if k == 0 {
        return Err(Error::EmptySymbolTable);
    }
    let lengths = if k == 1 {
        vec![1]
    } else {
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::with_capacity(k);
        let mut parent: Vec<usize> = vec![usize::MAX; 2 * k - 1];
        for (i, &c) in table.counts().iter().enumerate() {
            heap.push(Reverse((c, i)));
        }
        let mut next = k;
        while heap.len() > 1 {
            let Reverse((wa, a)) = heap.pop().unwrap();
            let Reverse((wb, b)) = heap.pop().unwrap();
            parent[a] = next;
            parent[b] = next;
            heap.push(Reverse((wa + wb, next)));
            next += 1;
        }
        // Parents always have larger ids, so depths resolve top-down.
        let root = next - 1;
        let mut depth = vec![0u32; 2 * k - 1];
        for node in (0..root).rev() {
            depth[node] = depth[parent[node]] + 1;
        }
        depth.truncate(k);
        depth
    };
    if let Some(&too_long) = lengths.iter().find(|&&l| l > MAX_CODE_LEN) {
        return Err(Error::CodewordTooLong(too_long as usize));
    }
    HuffmanCode::from_lengths(table.symbols().to_vec(), lengths, table.counts().to_vec())
}

impl HuffmanCode {
    /// Reconstructs the canonical code from per-symbol lengths. `symbols`
    /// must be strictly sorted; `counts` may be all zero when unknown.
    pub fn from_lengths(symbols: Vec<f32>, lengths: Vec<u32>, counts: Vec<u64>) -> Result<Self> {
        let k = symbols.len();
        if k == 0 {
            return Err(Error::EmptySymbolTable);
        }
        if lengths.len() != k || counts.len() != k {
            return Err(Error::InvalidConfig(
                "symbol, length and count arrays differ in size".into(),
            ));
        }
        if symbols.windows(2).any(|w| w[0].total_cmp(&w[1]).is_ge()) {
            return Err(Error::InvalidConfig("symbols must be strictly increasing".into()));
        }
        if let Some(&bad) = lengths.iter().find(|&&l| l == 0 || l > MAX_CODE_LEN) {
            return Err(Error::CodewordTooLong(bad as usize));
        }
        // Kraft: sum 2^-len must not exceed one.
        let kraft: u128 = lengths.iter().map(|&l| 1u128 << (MAX_CODE_LEN - l)).sum();
        if kraft > 1u128 << MAX_CODE_LEN {
            return Err(Error::InvalidConfig("code lengths violate the Kraft inequality".into()));
        }

        let mut canonical: Vec<u32> = (0..k as u32).collect();
        canonical.sort_by_key(|&i| (lengths[i as usize], i));
        let max_len = *lengths.iter().max().unwrap();

        let mut codes = vec![0u64; k];
        let mut first_code = vec![0u64; max_len as usize + 1];
        let mut first_index = vec![0u32; max_len as usize + 1];
        let mut count_at_len = vec![0u32; max_len as usize + 1];
        let mut code: u64 = 0;
        let mut prev_len = lengths[canonical[0] as usize];
        for (pos, &s) in canonical.iter().enumerate() {
            let len = lengths[s as usize];
            if pos > 0 {
                code = (code + 1) << (len - prev_len);
            }
            codes[s as usize] = code;
            if count_at_len[len as usize] == 0 {
                first_code[len as usize] = code;
                first_index[len as usize] = pos as u32;
            }
            count_at_len[len as usize] += 1;
            prev_len = len;
        }

        Ok(Self {
            symbols,
            lengths,
            codes,
            counts,
            canonical,
            first_code,
            first_index,
            count_at_len,
            max_len,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[f32] {
        &self.symbols
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    #[inline]
    pub fn symbol(&self, index: u32) -> f32 {
        self.symbols[index as usize]
    }

    /// `(codeword, length)` for the symbol at `index`.
    #[inline]
    pub fn codeword(&self, index: usize) -> (u64, u32) {
        (self.codes[index], self.lengths[index])
    }

    pub fn index_of(&self, symbol: f32) -> Option<usize> {
        self.symbols.binary_search_by(|s| s.total_cmp(&symbol)).ok()
    }

    /// `(codeword, length)` for `symbol`.
    pub fn lookup(&self, symbol: f32) -> Result<(u64, u32)> {
        self.index_of(symbol)
            .map(|i| self.codeword(i))
            .ok_or(Error::UnknownSymbol(symbol))
    }

    /// Symbol indices in canonical `(length, symbol)` order.
    pub fn canonical_order(&self) -> &[u32] {
        &self.canonical
    }

    /// Resolves `bits` (the last `len` bits read) to a symbol index if they
    /// form a complete codeword.
    #[inline]
    pub fn match_code(&self, bits: u64, len: u32) -> Option<u32> {
        if len > self.max_len {
            return None;
        }
        let l = len as usize;
        let count = self.count_at_len[l];
        if count == 0 {
            return None;
        }
        let offset = bits.wrapping_sub(self.first_code[l]);
        if bits >= self.first_code[l] && offset < count as u64 {
            Some(self.canonical[self.first_index[l] as usize + offset as usize])
        } else {
            None
        }
    }

    /// Replaces the occurrence counts (used after loading a code from disk).
    pub fn set_counts(&mut self, counts: Vec<u64>) {
        assert_eq!(counts.len(), self.symbols.len());
        self.counts = counts;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Average codeword length in bits, weighted by symbol counts.
    pub fn avg_len(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.encoded_bits() as f64 / total as f64
    }

    /// Source entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.counts)
    }

    /// Exact length of the bit stream that encodes the counted source.
    pub fn encoded_bits(&self) -> u64 {
        self.counts.iter().zip(&self.lengths).map(|(&c, &l)| c * l as u64).sum()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.lengths.iter().map(|&l| (-(l as f64)).exp2()).sum()
    }

    /// Kraft equality, evaluated exactly.
    pub fn kraft_is_complete(&self) -> bool {
        let kraft: u128 = self.lengths.iter().map(|&l| 1u128 << (MAX_CODE_LEN - l)).sum();
        kraft == 1u128 << MAX_CODE_LEN
    }

    /// True when no codeword is a prefix of another (pairwise check).
    pub fn is_prefix_free(&self) -> bool {
        let k = self.len();
        for i in 0..k {
            let (ci, li) = self.codeword(i);
            for j in 0..k {
                if i == j {
                    continue;
                }
                let (cj, lj) = self.codeword(j);
                if li <= lj && (cj >> (lj - li)) == ci {
                    return false;
                }
            }
        }
        true
    }
}

/// Dictionary cost used by the space bounds: two dictionaries (encode and
/// decode), each charged `3b` bits per entry.
pub fn dict_bits(code: &HuffmanCode, b: WordSize) -> u64 {
    dict_bits_for(code.len(), b)
}

pub(crate) fn dict_bits_for(k: usize, b: WordSize) -> u64 {
    6 * k as u64 * b.bits() as u64
}
