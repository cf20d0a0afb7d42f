use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, WordSize};
use crate::quant::{Codebook, PRUNED};

/// Largest codebook the index map accepts.
pub const MAX_INDEX_MAP_K: usize = 1 << 16;

/// Per-entry indices, column-major, one byte each while `k <= 256`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexStore {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl IndexStore {
    /// Stored width `b̄` in bits.
    pub fn width(&self) -> u32 {
        match self {
            IndexStore::U8(_) => 8,
            IndexStore::U16(_) => 16,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            IndexStore::U8(v) => v.len(),
            IndexStore::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        match self {
            IndexStore::U8(v) => v[i] as usize,
            IndexStore::U16(v) => v[i] as usize,
        }
    }

    fn for_k(k: usize, len: usize) -> Self {
        if k <= 256 {
            IndexStore::U8(vec![0; len])
        } else {
            IndexStore::U16(vec![0; len])
        }
    }

    fn set(&mut self, i: usize, v: usize) {
        match self {
            IndexStore::U8(s) => s[i] = v as u8,
            IndexStore::U16(s) => s[i] = v as u16,
        }
    }
}

/// Index map: full-precision centers plus one small index per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMapMatrix {
    n: usize,
    m: usize,
    pub(crate) centers: Vec<f32>,
    pub(crate) indices: IndexStore,
}

impl IndexMapMatrix {
    pub fn from_parts(n: usize, m: usize, centers: Vec<f32>, indices: IndexStore) -> Result<Self> {
        let k = centers.len();
        if k == 0 || k > MAX_INDEX_MAP_K {
            return Err(Error::InvalidConfig(format!(
                "index map needs 1..={MAX_INDEX_MAP_K} centers, got {k}"
            )));
        }
        if n == 0 || m == 0 || n.checked_mul(m) != Some(indices.len()) {
            return Err(Error::DimensionMismatch {
                expected: n.saturating_mul(m),
                actual: indices.len(),
            });
        }
        if indices.width() != width_for(k) {
            return Err(Error::InvalidConfig(format!(
                "{k} centers need {}-bit indices, got {}",
                width_for(k),
                indices.width()
            )));
        }
        if let Some(c) = centers.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite center {c}")));
        }
        if let Some(i) = (0..indices.len()).find(|&i| indices.get(i) >= k) {
            return Err(Error::InvalidMatrix(format!(
                "index {} out of range at entry {i}",
                indices.get(i)
            )));
        }
        Ok(Self { n, m, centers, indices })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn centers(&self) -> &[f32] {
        &self.centers
    }

    pub fn indices(&self) -> &IndexStore {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// `b̄ n m + k b`.
    pub fn accounted_bits(&self, b: WordSize) -> u64 {
        self.indices.width() as u64 * (self.n * self.m) as u64 + self.k() as u64 * b.bits() as u64
    }
}

fn width_for(k: usize) -> u32 {
    if k <= 256 {
        8
    } else {
        16
    }
}

/// Builds the index map of `m` from `cb`. Pruned entries of the codebook are
/// mapped to a zero center, appended when the codebook lacks one. The
/// codebook must reproduce `m` exactly.
pub fn to_index_map(m: &DenseMatrix, cb: &Codebook) -> Result<IndexMapMatrix> {
    let (n, cols) = (m.rows(), m.cols());
    if cb.rows != n || cb.cols != cols {
        return Err(Error::DimensionMismatch {
            expected: n * cols,
            actual: cb.rows * cb.cols,
        });
    }
    cb.validate()?;
    let mut centers = cb.centers.clone();
    let zero_slot = if cb.has_pruned() {
        match centers.iter().position(|c| c.to_bits() == 0.0f32.to_bits()) {
            Some(z) => z,
            None => {
                centers.push(0.0);
                centers.len() - 1
            }
        }
    } else {
        0
    };
    let k = centers.len();
    if k == 0 || k > MAX_INDEX_MAP_K {
        return Err(Error::Unsupported(format!(
            "index map supports 1..={MAX_INDEX_MAP_K} centers, codebook has {k}"
        )));
    }
    let data = m.as_slice();
    let mut indices = IndexStore::for_k(k, n * cols);
    for i in 0..n {
        for j in 0..cols {
            let r = i * cols + j;
            let a = match cb.assignments[r] {
                PRUNED => zero_slot,
                a => a as usize,
            };
            if centers[a].to_bits() != data[r].to_bits() {
                return Err(Error::InvalidConfig(format!(
                    "codebook gives {} at ({i}, {j}) but the matrix holds {}",
                    centers[a], data[r]
                )));
            }
            indices.set(j * n + i, a);
        }
    }
    Ok(IndexMapMatrix {
        n,
        m: cols,
        centers,
        indices,
    })
}

pub fn from_index_map(im: &IndexMapMatrix) -> Result<DenseMatrix> {
    let (n, m) = (im.n, im.m);
    let mut data = crate::matrix::try_zeroed(n * m)?;
    for j in 0..m {
        for i in 0..n {
            data[i * m + j] = im.centers[im.indices.get(j * n + i)];
        }
    }
    DenseMatrix::new(n, m, data)
}
