//! Binary `.shamz` container. All integers little-endian.
//!
//! ```text
//! header   magic "SHMZ" | version u16 | format tag u8 | word bits u8
//!          | n u32 | m u32 | k u32 | s f64
//! dict     k u32 | k x (symbol f32, code length u8), canonical order
//! HAM      dict | bit_len u64 | words (b/8 bytes each)
//! sHAM     dict | bit_len u64 | words | q u32
//!          | ri packed at ceil(log2 n) bits, MSB-first | cb (m+1) x u32
//! CSC      q u32 | nz q x f32 | ri q x u32 | cb (m+1) x u32
//! IMAP     k x f32 centers | index width u8 | n m indices, column-major
//! ```
//!
//! The header `k` and `s` must agree with the body.

use std::io::Write;

use crate::error::{Error, Result};
use crate::huffman::{BitStream, HuffmanCode};
use crate::matrix::WordSize;

use super::{
    index_width, Archive, CompressedMatrix, CscMatrix, Format, HamMatrix, IndexMapMatrix, IndexStore, ShamMatrix,
};

pub const MAGIC: [u8; 4] = *b"SHMZ";
pub const CONTAINER_VERSION: u16 = 1;

pub fn write_archive<W: Write>(archive: &Archive, out: &mut W) -> Result<()> {
    let matrix = archive.matrix();
    out.write_all(&header(archive))?;
    let mut body = Vec::new();
    match matrix {
        CompressedMatrix::Ham(h) => {
            put_dict(&mut body, Some(h.code()));
            put_stream(&mut body, h.stream());
        }
        CompressedMatrix::Sham(s) => {
            put_dict(&mut body, s.code());
            put_stream(&mut body, s.stream());
            body.extend_from_slice(&(s.nnz() as u32).to_le_bytes());
            pack_indices(&mut body, s.ri(), index_width(s.rows()));
            for c in s.cb() {
                body.extend_from_slice(&c.to_le_bytes());
            }
        }
        CompressedMatrix::Csc(c) => {
            body.extend_from_slice(&(c.nnz() as u32).to_le_bytes());
            for v in c.nz() {
                body.extend_from_slice(&v.to_le_bytes());
            }
            for r in c.ri() {
                body.extend_from_slice(&r.to_le_bytes());
            }
            for x in c.cb() {
                body.extend_from_slice(&x.to_le_bytes());
            }
        }
        CompressedMatrix::IndexMap(im) => {
            for c in im.centers() {
                body.extend_from_slice(&c.to_le_bytes());
            }
            body.push(im.indices().width() as u8);
            match im.indices() {
                IndexStore::U8(v) => body.extend_from_slice(v),
                IndexStore::U16(v) => v.iter().for_each(|x| body.extend_from_slice(&x.to_le_bytes())),
            }
        }
    }
    out.write_all(&body)?;
    Ok(())
}

const HEADER_LEN: usize = 28;

fn header(archive: &Archive) -> [u8; HEADER_LEN] {
    let matrix = archive.matrix();
    let (n, m) = (matrix.rows(), matrix.cols());
    let (k, q) = summary(matrix);
    let mut head = [0u8; HEADER_LEN];
    head[0..4].copy_from_slice(&MAGIC);
    head[4..6].copy_from_slice(&CONTAINER_VERSION.to_le_bytes());
    head[6] = matrix.format().tag();
    head[7] = archive.word_size().bits() as u8;
    head[8..12].copy_from_slice(&(n as u32).to_le_bytes());
    head[12..16].copy_from_slice(&(m as u32).to_le_bytes());
    head[16..20].copy_from_slice(&(k as u32).to_le_bytes());
    head[20..28].copy_from_slice(&(q as f64 / (n * m) as f64).to_le_bytes());
    head
}

/// Header `k` (distinct stored symbols) and non-zero count.
fn summary(matrix: &CompressedMatrix) -> (usize, usize) {
    let nm = matrix.rows() * matrix.cols();
    match matrix {
        CompressedMatrix::Ham(h) => {
            let zeros = h.code().index_of(0.0).map_or(0, |z| h.code().counts()[z] as usize);
            (h.k(), nm - zeros)
        }
        CompressedMatrix::Sham(s) => (s.k(), s.nnz()),
        CompressedMatrix::Csc(c) => (distinct(c.nz()), c.nnz()),
        CompressedMatrix::IndexMap(im) => {
            let zeros = im
                .centers()
                .iter()
                .position(|c| *c == 0.0)
                .map_or(0, |z| (0..nm).filter(|&i| im.indices().get(i) == z).count());
            (im.k(), nm - zeros)
        }
    }
}

fn distinct(values: &[f32]) -> usize {
    let mut v: Vec<u32> = values.iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn put_dict(out: &mut Vec<u8>, code: Option<&HuffmanCode>) {
    let Some(code) = code else {
        out.extend_from_slice(&0u32.to_le_bytes());
        return;
    };
    out.extend_from_slice(&(code.len() as u32).to_le_bytes());
    for &i in code.canonical_order() {
        out.extend_from_slice(&code.symbol(i).to_le_bytes());
        out.push(code.lengths()[i as usize] as u8);
    }
}

fn put_stream(out: &mut Vec<u8>, s: &BitStream) {
    out.extend_from_slice(&s.bit_len().to_le_bytes());
    for &w in s.words() {
        match s.word_size() {
            WordSize::W32 => out.extend_from_slice(&(w as u32).to_le_bytes()),
            WordSize::W64 => out.extend_from_slice(&w.to_le_bytes()),
        }
    }
}

fn pack_indices(out: &mut Vec<u8>, values: &[u32], width: u32) {
    let mut acc: u8 = 0;
    let mut used = 0u32;
    for &v in values {
        for bit in (0..width).rev() {
            acc |= (((v >> bit) & 1) as u8) << (7 - used);
            used += 1;
            if used == 8 {
                out.push(acc);
                acc = 0;
                used = 0;
            }
        }
    }
    if used > 0 {
        out.push(acc);
    }
}

/// Byte cursor that reports failures with their offset.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, at: usize, reason: impl Into<String>) -> Error {
        Error::CorruptContainer {
            offset: at as u64,
            reason: reason.into(),
        }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return Err(self.corrupt(
                self.buf.len(),
                format!(
                    "truncated: {what} needs {len} bytes, {} left",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    /// Fails early when `count` items of `size` bytes cannot fit, so a
    /// corrupt count never triggers a huge allocation.
    fn ensure(&self, count: u64, size: u64, what: &str) -> Result<usize> {
        let need = count.checked_mul(size);
        match need {
            Some(need) if need <= (self.buf.len() - self.pos) as u64 => Ok(count as usize),
            _ => Err(self.corrupt(self.pos, format!("truncated: {count} {what} do not fit in the file"))),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u32s(&mut self, count: usize, what: &str) -> Result<Vec<u32>> {
        self.ensure(count as u64, 4, what)?;
        (0..count).map(|_| self.u32(what)).collect()
    }
}

/// Parses a container. Structural problems in the body are reported as
/// corruption at the offset of the section they were found in.
pub fn read_archive(bytes: &[u8]) -> Result<Archive> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.corrupt(0, "bad magic"));
    }
    let version = r.u16("version")?;
    if version != CONTAINER_VERSION {
        return Err(r.corrupt(4, format!("unsupported version {version}")));
    }
    let tag = r.u8("format tag")?;
    let format = Format::from_tag(tag).ok_or_else(|| r.corrupt(6, format!("unknown format tag {tag}")))?;
    let wbits = r.u8("word size")?;
    let word = WordSize::from_bits(wbits as u32).map_err(|_| r.corrupt(7, format!("bad word size {wbits}")))?;
    let n = r.u32("n")? as usize;
    let m = r.u32("m")? as usize;
    if n == 0 || m == 0 {
        return Err(r.corrupt(8, format!("bad dimensions {n}x{m}")));
    }
    let header_k = r.u32("k")? as usize;
    let header_s = r.f64("s")?;
    let nm = n.checked_mul(m).ok_or_else(|| r.corrupt(8, "n*m overflows"))?;

    let wrap = |e: Error, at: usize| match e {
        Error::CorruptContainer { .. } => e,
        other => Error::CorruptContainer {
            offset: at as u64,
            reason: other.to_string(),
        },
    };

    let matrix = match format {
        Format::Ham => {
            let at = r.pos;
            let code = read_dict(&mut r)?.ok_or_else(|| r.corrupt(at, "HAM needs a non-empty dictionary"))?;
            let at = r.pos;
            let stream = read_stream(&mut r, word)?;
            CompressedMatrix::Ham(HamMatrix::from_parts(n, m, code, stream).map_err(|e| wrap(e, at))?)
        }
        Format::Sham => {
            let code = read_dict(&mut r)?;
            let at = r.pos;
            let stream = read_stream(&mut r, word)?;
            let q = r.u32("q")? as usize;
            if q > nm {
                return Err(r.corrupt(r.pos - 4, format!("{q} non-zeros exceed {nm} entries")));
            }
            let width = index_width(n);
            let ri_bytes = (q as u64 * width as u64).div_ceil(8);
            r.ensure(ri_bytes, 1, "row index bytes")?;
            let ri_at = r.pos;
            let packed = r.take(ri_bytes as usize, "row indices")?;
            let ri = unpack_indices(packed, q, width);
            if width > 0 && !(q as u64 * width as u64).is_multiple_of(8) {
                let spare = 8 - (q as u64 * width as u64 % 8) as u32;
                if packed[packed.len() - 1] & ((1u8 << spare) - 1) != 0 {
                    return Err(r.corrupt(ri_at + packed.len() - 1, "non-zero padding after row indices"));
                }
            }
            let cb = r.u32s(m + 1, "column boundaries")?;
            CompressedMatrix::Sham(ShamMatrix::from_parts(n, m, code, stream, ri, cb).map_err(|e| wrap(e, at))?)
        }
        Format::Csc => {
            let at = r.pos;
            let q = r.u32("q")? as usize;
            r.ensure(q as u64, 8, "non-zeros")?;
            let nz = (0..q).map(|_| r.f32("nz")).collect::<Result<Vec<_>>>()?;
            let ri = r.u32s(q, "row indices")?;
            let cb = r.u32s(m + 1, "column boundaries")?;
            CompressedMatrix::Csc(CscMatrix::new(n, m, nz, ri, cb).map_err(|e| wrap(e, at))?)
        }
        Format::IndexMap => {
            let at = r.pos;
            if header_k == 0 || header_k > super::MAX_INDEX_MAP_K {
                return Err(r.corrupt(16, format!("bad center count {header_k}")));
            }
            r.ensure(header_k as u64, 4, "centers")?;
            let centers = (0..header_k).map(|_| r.f32("center")).collect::<Result<Vec<_>>>()?;
            let width = r.u8("index width")?;
            let indices = match width {
                8 => {
                    r.ensure(nm as u64, 1, "indices")?;
                    IndexStore::U8(r.take(nm, "indices")?.to_vec())
                }
                16 => {
                    r.ensure(nm as u64, 2, "indices")?;
                    let raw = r.take(nm * 2, "indices")?;
                    IndexStore::U16(raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
                }
                w => return Err(r.corrupt(r.pos - 1, format!("bad index width {w}"))),
            };
            CompressedMatrix::IndexMap(IndexMapMatrix::from_parts(n, m, centers, indices).map_err(|e| wrap(e, at))?)
        }
    };
    if r.pos != bytes.len() {
        return Err(r.corrupt(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let archive = Archive::new(matrix, word).map_err(|e| wrap(e, 7))?;
    let expected = header(&archive);
    if expected[16..20] != bytes[16..20] {
        return Err(r.corrupt(16, format!("header k = {header_k} disagrees with the body")));
    }
    if expected[20..28] != bytes[20..28] {
        return Err(r.corrupt(20, format!("header s = {header_s} disagrees with the body")));
    }
    Ok(archive)
}

fn read_dict(r: &mut Reader<'_>) -> Result<Option<HuffmanCode>> {
    let at = r.pos;
    let k = r.u32("dictionary size")? as usize;
    if k == 0 {
        return Ok(None);
    }
    r.ensure(k as u64, 5, "dictionary entries")?;
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let sym = r.f32("symbol")?;
        let len = r.u8("code length")? as u32;
        if !sym.is_finite() {
            return Err(r.corrupt(r.pos - 5, format!("non-finite symbol {sym}")));
        }
        entries.push((sym, len));
    }
    let mut sorted = entries.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let code = HuffmanCode::from_lengths(
        sorted.iter().map(|e| e.0).collect(),
        sorted.iter().map(|e| e.1).collect(),
        vec![0; k],
    )
    .map_err(|e| r.corrupt(at, format!("bad dictionary: {e}")))?;
    let canonical: Vec<(f32, u32)> = code
        .canonical_order()
        .iter()
        .map(|&i| (code.symbol(i), code.lengths()[i as usize]))
        .collect();
    if canonical
        .iter()
        .map(|e| (e.0.to_bits(), e.1))
        .ne(entries.iter().map(|e| (e.0.to_bits(), e.1)))
    {
        return Err(r.corrupt(at, "dictionary is not in canonical order"));
    }
    Ok(Some(code))
}

fn read_stream(r: &mut Reader<'_>, word: WordSize) -> Result<BitStream> {
    let at = r.pos;
    let bit_len = r.u64("stream length")?;
    let bytes = word.bits() as u64 / 8;
    let count = bit_len.div_ceil(word.bits() as u64);
    r.ensure(count, bytes, "stream words")?;
    let words_at = r.pos;
    let raw = r.take((count * bytes) as usize, "stream words")?;
    let words = match word {
        WordSize::W32 => raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as u64)
            .collect(),
        WordSize::W64 => raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    BitStream::from_words(words, bit_len, word).map_err(|e| {
        r.corrupt(
            if raw.is_empty() {
                at
            } else {
                words_at + raw.len() - bytes as usize
            },
            e.to_string(),
        )
    })
}

fn unpack_indices(packed: &[u8], count: usize, width: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    let mut bit = 0usize;
    for _ in 0..count {
        let mut v = 0u32;
        for _ in 0..width {
            let byte = packed[bit / 8];
            v = (v << 1) | ((byte >> (7 - bit % 8)) & 1) as u32;
            bit += 1;
        }
        out.push(v);
    }
    out
}
