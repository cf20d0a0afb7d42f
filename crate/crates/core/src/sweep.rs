//! Grid sweeps over matrix size, pruning level, codebook size, quantizer
//! and format, reporting space and dot-product timing per cell.
//!
//! Sweep files are plain `key = value` lines; `#` starts a comment and
//! list values are comma separated. Recognised keys:
//!
//! ```text
//! sizes     = 512x4096            # n x m, one synthetic matrix each
//! seed      = 42
//! prune     = 60,70,80,90,95,99   # percentiles; "none" for no pruning
//! k         = 32,256
//! methods   = cws                 # cws | pws | uq | ecsq
//! formats   = ham,sham,csc,imap   # or auto
//! word_bits = 32
//! threads   = 8
//! dot_runs  = 5                   # timed runs per cell; 0 disables timing
//! vectors   = 8                   # input vectors per timed product
//! ```
//!
//! An empty list yields an empty grid. Synthetic matrices are uniform on
//! `[-1, 1]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{Archive, Format};
use crate::kernels::{median_ns, pardot, DotBatch};
use crate::matrix::{DenseMatrix, WordSize};
use crate::pipeline::{choose_auto, quantize, FormatChoice, QuantSpec};
use crate::quant::{prune, Method, PruneConfig};
use crate::rng::Rng;

/// Smallest accepted number of timed runs.
pub const MIN_TIMED_RUNS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sizes: Vec<(usize, usize)>,
    pub seed: u64,
    /// `None` entries mean no pruning.
    pub prune: Vec<Option<f64>>,
    pub k: Vec<usize>,
    pub methods: Vec<Method>,
    pub formats: Vec<FormatChoice>,
    pub word: WordSize,
    pub threads: usize,
    pub dot_runs: usize,
    pub vectors: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            sizes: vec![(512, 4096)],
            seed: 42,
            prune: [60.0, 70.0, 80.0, 90.0, 95.0, 99.0].into_iter().map(Some).collect(),
            k: vec![32, 256],
            methods: vec![Method::Cws],
            formats: Format::ALL.into_iter().map(FormatChoice::Fixed).collect(),
            word: WordSize::W32,
            threads: 1,
            dot_runs: MIN_TIMED_RUNS,
            vectors: 8,
        }
    }
}

impl SweepSpec {
    /// Parses a sweep file. Keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line: line_no, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            let parse_all =
                |f: &dyn Fn(&str) -> std::result::Result<(), String>| items.iter().try_for_each(|s| f(s)).map_err(err);
            match key {
                "sizes" => {
                    let mut out = Vec::new();
                    for s in &items {
                        out.push(parse_size(s).map_err(err)?);
                    }
                    spec.sizes = out;
                }
                "seed" => spec.seed = value.parse().map_err(|e| err(format!("seed: {e}")))?,
                "prune" => {
                    let mut out = Vec::new();
                    for s in &items {
                        if s.eq_ignore_ascii_case("none") {
                            out.push(None);
                        } else {
                            let p: f64 = s.parse().map_err(|e| err(format!("prune '{s}': {e}")))?;
                            PruneConfig::new(p).map_err(|e| err(e.to_string()))?;
                            out.push(Some(p));
                        }
                    }
                    spec.prune = out;
                }
                "k" => {
                    let mut out = Vec::new();
                    parse_all(&|s| {
                        s.parse::<usize>()
                            .ok()
                            .filter(|&k| k >= 2)
                            .map(|_| ())
                            .ok_or_else(|| format!("k '{s}' must be an integer >= 2"))
                    })?;
                    for s in &items {
                        out.push(s.parse().unwrap());
                    }
                    spec.k = out;
                }
                "methods" => {
                    let mut out = Vec::new();
                    for s in &items {
                        out.push(s.parse::<Method>().map_err(|e| err(e.to_string()))?);
                    }
                    spec.methods = out;
                }
                "formats" => {
                    let mut out = Vec::new();
                    for s in &items {
                        out.push(s.parse::<FormatChoice>().map_err(|e| err(e.to_string()))?);
                    }
                    spec.formats = out;
                }
                "word_bits" => {
                    let b: u32 = value.parse().map_err(|e| err(format!("word_bits: {e}")))?;
                    spec.word = WordSize::from_bits(b).map_err(|e| err(e.to_string()))?;
                }
                "threads" => {
                    spec.threads = value
                        .parse()
                        .ok()
                        .filter(|&t| t >= 1)
                        .ok_or_else(|| err(format!("threads '{value}' must be >= 1")))?;
                }
                "dot_runs" => {
                    let r: usize = value.parse().map_err(|e| err(format!("dot_runs: {e}")))?;
                    if r != 0 && r < MIN_TIMED_RUNS {
                        return Err(err(format!("dot_runs must be 0 or >= {MIN_TIMED_RUNS}")));
                    }
                    spec.dot_runs = r;
                }
                "vectors" => {
                    spec.vectors = value
                        .parse()
                        .ok()
                        .filter(|&v| v >= 1)
                        .ok_or_else(|| err(format!("vectors '{value}' must be >= 1")))?;
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        Ok(spec)
    }

    pub fn cell_count(&self) -> usize {
        self.sizes.len() * self.prune.len() * self.k.len() * self.methods.len() * self.formats.len()
    }
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("size '{s}' must look like NxM"))?;
    let n: usize = a.trim().parse().map_err(|e| format!("size '{s}': {e}"))?;
    let m: usize = b.trim().parse().map_err(|e| format!("size '{s}': {e}"))?;
    if n == 0 || m == 0 {
        return Err(format!("size '{s}' must be positive"));
    }
    Ok((n, m))
}

/// One grid cell. Failed cells keep their coordinates and carry `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub p: Option<f64>,
    pub k: usize,
    pub method: Method,
    pub format: String,
    pub b: u32,
    pub threads: usize,
    /// Non-zero ratio after pruning and quantization.
    pub s: Option<f64>,
    pub k_distinct: Option<usize>,
    pub actual_bits: Option<u64>,
    pub bound_bits: Option<u64>,
    pub psi_actual: Option<f64>,
    pub psi_bound: Option<f64>,
    pub serialized_bits: Option<u64>,
    pub dense_bits: u64,
    pub compression_ratio: Option<f64>,
    pub dot_ns_median: Option<u64>,
    pub dense_dot_ns_median: Option<u64>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn kb(&self) -> Option<f64> {
        self.actual_bits.map(bits_to_kb)
    }
}

/// Kilobytes of 1000 bytes.
pub fn bits_to_kb(bits: u64) -> f64 {
    bits as f64 / 8000.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fixed-width summary with sizes in KB.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>11} {:>6} {:>5} {:>5} {:>5} {:>12} {:>12} {:>9} {:>9} {:>8} {:>12}",
            "size", "p", "k", "quant", "fmt", "KB", "bound KB", "psi", "psi bnd", "ratio", "dot ns"
        );
        for r in &self.rows {
            let size = format!("{}x{}", r.n, r.m);
            let p = r.p.map_or("-".into(), |p| format!("{p}"));
            if let Some(e) = &r.error {
                let _ = writeln!(
                    out,
                    "{size:>11} {p:>6} {:>5} {:>5} {:>5} error: {e}",
                    r.k, r.method, r.format
                );
                continue;
            }
            let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |v| format!("{v:.prec$}"));
            let _ = writeln!(
                out,
                "{size:>11} {p:>6} {:>5} {:>5} {:>5} {:>12} {:>12} {:>9} {:>9} {:>8} {:>12}",
                r.k,
                r.method,
                r.format,
                opt(r.kb(), 3),
                opt(r.bound_bits.map(bits_to_kb), 3),
                opt(r.psi_actual, 5),
                opt(r.psi_bound, 5),
                opt(r.compression_ratio, 2),
                r.dot_ns_median.map_or("-".into(), |t| t.to_string()),
            );
        }
        out
    }
}

/// Synthetic sweep matrix: entries uniform on `[-1, 1]`.
pub fn synthetic_matrix(n: usize, m: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = Rng::new(seed);
    DenseMatrix::new(n, m, (0..n * m).map(|_| rng.uniform(-1.0, 1.0) as f32).collect())
}

/// Runs every cell of the grid in order. Cells run one after another; only
/// the timed products use `threads` workers.
pub fn run_sweep(spec: &SweepSpec) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    if spec.cell_count() == 0 {
        return Ok(report);
    }
    for (si, &(n, m)) in spec.sizes.iter().enumerate() {
        let base_rng = Rng::new(spec.seed);
        let matrix = synthetic_matrix(n, m, base_rng.fork(2 * si as u64).next_u64())?;
        let mut vrng = base_rng.fork(2 * si as u64 + 1);
        let x = DotBatch::new(
            spec.vectors,
            n,
            (0..spec.vectors * n).map(|_| vrng.uniform(-1.0, 1.0)).collect(),
        )?;
        let dense_bits = spec.word.bits() as u64 * (n * m) as u64;
        let dense_ns = time_product(spec, &x, &matrix)?;

        for &p in &spec.prune {
            let pruned = match p {
                Some(p) => prune(&matrix, &PruneConfig::new(p)?)?,
                None => matrix.clone(),
            };
            for &k in &spec.k {
                for &method in &spec.methods {
                    let quant = QuantSpec {
                        method,
                        k,
                        seed: spec.seed,
                    };
                    let quantized = quantize(&pruned, &quant, p.is_some());
                    for &choice in &spec.formats {
                        let mut row = BenchRow {
                            n,
                            m,
                            p,
                            k,
                            method,
                            format: choice.to_string(),
                            b: spec.word.bits(),
                            threads: spec.threads,
                            s: None,
                            k_distinct: None,
                            actual_bits: None,
                            bound_bits: None,
                            psi_actual: None,
                            psi_bound: None,
                            serialized_bits: None,
                            dense_bits,
                            compression_ratio: None,
                            dot_ns_median: None,
                            dense_dot_ns_median: dense_ns,
                            error: None,
                        };
                        let cell = quantized
                            .as_ref()
                            .map_err(|e| Error::InvalidConfig(e.to_string()))
                            .and_then(|(q, _)| {
                                let format = match choice {
                                    FormatChoice::Fixed(f) => f,
                                    FormatChoice::Auto => choose_auto(&q.matrix, spec.word),
                                };
                                let archive = Archive::compress(&q.matrix, format, spec.word, Some(&q.codebook))?;
                                let ns = time_product(spec, &x, archive.matrix())?;
                                Ok((format, archive.space_report(), ns))
                            });
                        match cell {
                            Ok((format, rep, ns)) => {
                                row.format = format.to_string();
                                row.s = Some(rep.s);
                                row.k_distinct = Some(rep.k);
                                row.actual_bits = Some(rep.actual_bits);
                                row.bound_bits = rep.bound_bits;
                                row.psi_actual = Some(rep.psi_actual);
                                row.psi_bound = rep.psi_bound;
                                row.serialized_bits = Some(rep.serialized_bits);
                                row.compression_ratio = Some(rep.compression_ratio());
                                row.dot_ns_median = ns;
                            }
                            Err(e) => row.error = Some(e.to_string()),
                        }
                        report.rows.push(row);
                    }
                }
            }
        }
    }
    Ok(report)
}

fn time_product<W: crate::kernels::CompressedDot + ?Sized>(
    spec: &SweepSpec,
    x: &DotBatch,
    w: &W,
) -> Result<Option<u64>> {
    if spec.dot_runs == 0 {
        return Ok(None);
    }
    pardot(x, w, spec.threads)?;
    Ok(Some(median_ns(1, spec.dot_runs, || {
        let _ = pardot(x, w, spec.threads);
    })))
}
