//! Compressed matrix representations and their space accounting.
//!
//! Four formats are provided: the Huffman address map over every entry
//! ([`HamMatrix`]), its sparse variant that codes only the non-zeros and keeps
//! CSC-style index vectors ([`ShamMatrix`]), plain CSC ([`CscMatrix`]) and the
//! index map of a weight-sharing codebook ([`IndexMapMatrix`]).

mod bounds;
mod container;
mod csc;
pub mod dense_io;
mod ham;
mod index_map;
mod sham;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, WordSize};

pub use bounds::{bound_bits, crossover_s, Hypothesis, SpaceReport};
pub use container::{read_archive, write_archive, CONTAINER_VERSION, MAGIC};
pub use csc::{from_csc, to_csc, CscMatrix};
pub use ham::{from_ham, to_ham, HamMatrix};
pub use index_map::{from_index_map, to_index_map, IndexMapMatrix, IndexStore, MAX_INDEX_MAP_K};
pub use sham::{from_sham, to_sham, ShamMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Ham,
    Sham,
    Csc,
    #[serde(rename = "imap")]
    IndexMap,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Ham, Format::Sham, Format::Csc, Format::IndexMap];

    pub fn tag(self) -> u8 {
        match self {
            Format::Ham => 0,
            Format::Sham => 1,
            Format::Csc => 2,
            Format::IndexMap => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.tag() == tag)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Format::Ham => "ham",
            Format::Sham => "sham",
            Format::Csc => "csc",
            Format::IndexMap => "imap",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ham" => Ok(Format::Ham),
            "sham" => Ok(Format::Sham),
            "csc" => Ok(Format::Csc),
            "imap" | "index-map" | "indexmap" => Ok(Format::IndexMap),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompressedMatrix {
    Ham(HamMatrix),
    Sham(ShamMatrix),
    Csc(CscMatrix),
    IndexMap(IndexMapMatrix),
}

impl CompressedMatrix {
    pub fn format(&self) -> Format {
        match self {
            CompressedMatrix::Ham(_) => Format::Ham,
            CompressedMatrix::Sham(_) => Format::Sham,
            CompressedMatrix::Csc(_) => Format::Csc,
            CompressedMatrix::IndexMap(_) => Format::IndexMap,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            CompressedMatrix::Ham(h) => h.rows(),
            CompressedMatrix::Sham(s) => s.rows(),
            CompressedMatrix::Csc(c) => c.rows(),
            CompressedMatrix::IndexMap(i) => i.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            CompressedMatrix::Ham(h) => h.cols(),
            CompressedMatrix::Sham(s) => s.cols(),
            CompressedMatrix::Csc(c) => c.cols(),
            CompressedMatrix::IndexMap(i) => i.cols(),
        }
    }

    /// Word size fixed by the representation itself (the Huffman formats pack
    /// their stream into words); `None` for CSC and the index map.
    pub fn intrinsic_word_size(&self) -> Option<WordSize> {
        match self {
            CompressedMatrix::Ham(h) => Some(h.stream().word_size()),
            CompressedMatrix::Sham(s) => Some(s.stream().word_size()),
            _ => None,
        }
    }

    pub fn decompress(&self) -> Result<DenseMatrix> {
        match self {
            CompressedMatrix::Ham(h) => from_ham(h),
            CompressedMatrix::Sham(s) => from_sham(s),
            CompressedMatrix::Csc(c) => from_csc(c),
            CompressedMatrix::IndexMap(i) => from_index_map(i),
        }
    }
}

/// A compressed matrix together with the word size `b` its space is
/// accounted in. This is the unit written to and read from a container.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    matrix: CompressedMatrix,
    word: WordSize,
}

impl Archive {
    /// Fails when `word` disagrees with the packing of a Huffman stream.
    pub fn new(matrix: CompressedMatrix, word: WordSize) -> Result<Self> {
        if let Some(w) = matrix.intrinsic_word_size() {
            if w != word {
                return Err(Error::InvalidConfig(format!(
                    "stream is packed in {}-bit words, archive declares {}",
                    w.bits(),
                    word.bits()
                )));
            }
        }
        Ok(Self { matrix, word })
    }

    /// Builds `format` from `m`. The index map needs a codebook; without one
    /// the distinct values of `m` are used as centers.
    pub fn compress(
        m: &DenseMatrix,
        format: Format,
        word: WordSize,
        codebook: Option<&crate::quant::Codebook>,
    ) -> Result<Self> {
        let matrix = match format {
            Format::Ham => CompressedMatrix::Ham(to_ham(m, word)?),
            Format::Sham => CompressedMatrix::Sham(to_sham(m, word)?),
            Format::Csc => CompressedMatrix::Csc(to_csc(m)),
            Format::IndexMap => {
                let owned;
                let cb = match codebook {
                    Some(cb) => cb,
                    None => {
                        owned = crate::quant::Codebook::from_matrix(m, crate::quant::Method::Cws);
                        &owned
                    }
                };
                CompressedMatrix::IndexMap(to_index_map(m, cb)?)
            }
        };
        Ok(Self { matrix, word })
    }

    pub fn matrix(&self) -> &CompressedMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CompressedMatrix {
        self.matrix
    }

    pub fn word_size(&self) -> WordSize {
        self.word
    }

    pub fn format(&self) -> Format {
        self.matrix.format()
    }

    pub fn decompress(&self) -> Result<DenseMatrix> {
        self.matrix.decompress()
    }

    /// Serialized container bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_archive(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        read_archive(bytes)
    }

    pub fn space_report(&self) -> SpaceReport {
        SpaceReport::of(self)
    }
}

/// `ceil(log2 n)`, the width of a packed row index; 0 for `n <= 1`.
pub(crate) fn index_width(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}
