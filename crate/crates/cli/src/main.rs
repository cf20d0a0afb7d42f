//! `sham`: compress weight matrices into Huffman address-map and baseline
//! formats, verify and multiply them, and run size sweeps.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage or input error,
//! 3 corrupt container or stream.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sham_core::formats::dense_io::{read_dense, read_dense_bytes, write_dense};
use sham_core::formats::{bound_bits, crossover_s, Archive, Format, Hypothesis, SpaceReport, MAGIC};
use sham_core::kernels::{median_ns, pardot, DotBatch};
use sham_core::pipeline::{self, choose_auto, FormatChoice, PipelineSpec, QuantSpec};
use sham_core::quant::{Method, PruneConfig};
use sham_core::sweep::{run_sweep, SweepSpec};
use sham_core::{DenseMatrix, WordSize};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CORRUPT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sham",
    version,
    about = "Compressed storage and products for dense weight matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune, quantize and encode a dense matrix into a .shamz container.
    Compress(CompressArgs),
    /// Expand a container back to a dense file (.csv or raw by extension).
    Decompress {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that a container decodes to exactly the given dense matrix.
    Verify { compressed: PathBuf, original: PathBuf },
    /// Multiply row vectors by a compressed matrix without expanding it.
    Dot(DotArgs),
    /// Report space bounds for a container or for explicit parameters.
    Bounds(BoundsArgs),
    /// Run a grid sweep described by a key = value spec file.
    Sweep(SweepArgs),
    /// Sparsity statistics of a dense file or container.
    Stats {
        input: PathBuf,
        #[arg(long, default_value_t = 32, value_parser = parse_word_bits)]
        word_bits: u32,
    },
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Magnitude pruning percentile in [0, 100).
    #[arg(long)]
    prune_p: Option<f64>,
    #[arg(long, value_parser = parse_method)]
    quant: Option<Method>,
    /// Target codebook size for --quant.
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, env = "SHAM_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "auto", value_parser = parse_format_choice)]
    format: FormatChoice,
    #[arg(long, default_value_t = 32, value_parser = parse_word_bits)]
    word_bits: u32,
    #[arg(long, value_enum)]
    report: Option<ReportKind>,
    /// Also write the matrix as encoded, after pruning and quantization.
    #[arg(long)]
    quantized_out: Option<PathBuf>,
}

#[derive(Args)]
struct DotArgs {
    compressed: PathBuf,
    /// Dense file whose rows are the input vectors; an n x 1 column is read
    /// as a single vector.
    vectors: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Timed repetitions for the median; 0 skips timing.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Container to report on. Without it, --n, --m, --k and --s are used.
    archive: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Non-zero ratio.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 32, value_parser = parse_word_bits)]
    word_bits: u32,
    #[arg(long, value_enum)]
    report: Option<ReportKind>,
}

#[derive(Args)]
struct SweepArgs {
    spec: PathBuf,
    /// Overrides the spec's thread count.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    report: Option<ReportKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Csv,
    Json,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: sham_core::Error| e.to_string())
}

fn parse_format_choice(s: &str) -> Result<FormatChoice, String> {
    s.parse().map_err(|e: sham_core::Error| e.to_string())
}

fn parse_word_bits(s: &str) -> Result<u32, String> {
    match s {
        "32" => Ok(32),
        "64" => Ok(64),
        _ => Err(format!("word size must be 32 or 64, got '{s}'")),
    }
}

fn word(bits: u32) -> WordSize {
    WordSize::from_bits(bits).expect("validated by the argument parser")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let corrupt = err
                .chain()
                .any(|e| e.downcast_ref::<sham_core::Error>().is_some_and(|e| e.is_corruption()));
            ExitCode::from(if corrupt { EXIT_CORRUPT } else { EXIT_USAGE })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress { input, out } => {
            let m = load_archive(&input)?.decompress()?;
            write_dense(&m, &out).with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { compressed, original } => verify(&compressed, &original),
        Command::Dot(a) => dot(a),
        Command::Bounds(a) => bounds(a),
        Command::Sweep(a) => sweep(a),
        Command::Stats { input, word_bits } => stats(&input, word(word_bits)),
    }
}

fn load_dense(path: &Path) -> anyhow::Result<DenseMatrix> {
    read_dense(path).with_context(|| format!("reading {}", path.display()))
}

fn load_archive(path: &Path) -> anyhow::Result<Archive> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Archive::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn compress(a: CompressArgs) -> anyhow::Result<ExitCode> {
    let input = load_dense(&a.input)?;
    let spec = PipelineSpec {
        prune: a.prune_p.map(PruneConfig::new).transpose()?,
        quant: a.quant.map(|method| QuantSpec {
            method,
            k: a.k,
            seed: a.seed,
        }),
        format: a.format,
        word: word(a.word_bits),
    };
    let out = pipeline::run(&input, &spec)?;
    fs::write(&a.out, out.archive.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.quantized_out {
        write_dense(&out.matrix, path).with_context(|| format!("writing {}", path.display()))?;
    }
    print_report(&out.report, a.report)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(compressed: &Path, original: &Path) -> anyhow::Result<ExitCode> {
    let expected = load_dense(original)?;
    let got = load_archive(compressed)?.decompress()?;
    if (got.rows(), got.cols()) != (expected.rows(), expected.cols()) {
        println!(
            "FAIL: shape {}x{} differs from {}x{}",
            got.rows(),
            got.cols(),
            expected.rows(),
            expected.cols()
        );
        return Ok(ExitCode::from(EXIT_MISMATCH));
    }
    match got.first_mismatch(&expected) {
        None => {
            println!("OK: {}x{} matches bit for bit", got.rows(), got.cols());
            Ok(ExitCode::SUCCESS)
        }
        Some((i, j)) => {
            println!(
                "FAIL: entry ({i}, {j}) decodes to {} but the original holds {}",
                got.get(i, j),
                expected.get(i, j)
            );
            Ok(ExitCode::from(EXIT_MISMATCH))
        }
    }
}

fn dot(a: DotArgs) -> anyhow::Result<ExitCode> {
    if a.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let archive = load_archive(&a.compressed)?;
    let w = archive.matrix();
    let n = w.rows();
    let v = load_dense(&a.vectors)?;
    let v = if v.cols() == 1 && v.rows() == n && n != 1 {
        DenseMatrix::new(1, n, v.into_vec())?
    } else {
        v
    };
    if v.cols() != n {
        bail!("vectors have length {} but the matrix has {n} rows", v.cols());
    }
    let x = DotBatch::new(v.rows(), n, v.as_slice().iter().map(|&x| x as f64).collect())?;
    let y = pardot(&x, w, a.threads)?;

    let mut text = String::new();
    for i in 0..y.rows() {
        let row: Vec<String> = y.row(i).iter().map(f64::to_string).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match &a.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if a.runs > 0 {
        let ns = median_ns(1, a.runs, || {
            std::hint::black_box(pardot(&x, w, a.threads).expect("succeeded once"));
        });
        eprintln!(
            "{} x {} product: median {ns} ns over {} runs, {} thread(s)",
            y.rows(),
            y.cols(),
            a.runs,
            a.threads
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(a: BoundsArgs) -> anyhow::Result<ExitCode> {
    if let Some(path) = &a.archive {
        let report = load_archive(path)?.space_report();
        print_report(&report, a.report)?;
        return Ok(ExitCode::SUCCESS);
    }
    let (Some(n), Some(m), Some(k), Some(s)) = (a.n, a.m, a.k, a.s) else {
        bail!("give a container, or all of --n, --m, --k and --s");
    };
    if n == 0 || m == 0 || k == 0 || !(0.0..=1.0).contains(&s) {
        bail!("need n, m, k >= 1 and s in [0, 1]");
    }
    let b = word(a.word_bits);
    let dense = (b.bits() as u64 * n as u64 * m as u64) as f64;
    println!("n={n} m={m} k={k} s={s} b={}", b.bits());
    for (format, fs) in [(Format::Ham, 1.0), (Format::Sham, s)] {
        for h in [Hypothesis::WorstCase, Hypothesis::KDistinct] {
            let bits = bound_bits(format, n, m, fs, k, b, h).expect("defined for Huffman formats");
            println!(
                "{format:<5} {h:<11} {:>16.0} bits  psi={:.6}",
                bits.ceil(),
                bits / dense
            );
        }
    }
    println!("crossover_s={:.6}", crossover_s(k, b, n, m));
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let mut spec = SweepSpec::parse(&text).with_context(|| format!("parsing {}", a.spec.display()))?;
    if let Some(t) = a.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        spec.threads = t;
    }
    let report = run_sweep(&spec)?;
    let kind = a.report.or_else(|| {
        a.out.as_ref().map(|p| match p.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportKind::Json,
            _ => ReportKind::Csv,
        })
    });
    let text = match kind {
        Some(ReportKind::Csv) => report.to_csv()?,
        Some(ReportKind::Json) => report.to_json()?,
        None => report.to_table(),
    };
    match &a.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the error column", report.rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(path: &Path, b: WordSize) -> anyhow::Result<ExitCode> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let m = if bytes.starts_with(&MAGIC) {
        Archive::from_bytes(&bytes)?.decompress()?
    } else {
        read_dense_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))?
    };
    let st = m.stats();
    let k = st.k_nonzero().max(1);
    println!("n={} m={}", m.rows(), m.cols());
    println!("nonzeros={} s={:.6}", st.q, st.s);
    println!("distinct={} distinct_nonzero={}", st.k_distinct, st.k_nonzero());
    println!(
        "crossover_s={:.6} (b={})",
        crossover_s(k, b, m.rows(), m.cols()),
        b.bits()
    );
    println!("auto_format={}", choose_auto(&m, b));
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &SpaceReport, kind: Option<ReportKind>) -> anyhow::Result<()> {
    match kind {
        Some(ReportKind::Json) => println!("{}", serde_json::to_string_pretty(r)?),
        Some(ReportKind::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.serialize(r)?;
            w.flush()?;
        }
        None => {
            println!("format={} n={} m={} b={}", r.format, r.n, r.m, r.b);
            println!("nonzeros={} s={:.6} k={}", r.q, r.s, r.k);
            println!("actual_bits={} psi_actual={:.6}", r.actual_bits, r.psi_actual);
            match (r.bound_bits, r.psi_bound, r.hypothesis) {
                (Some(bits), Some(psi), Some(h)) => {
                    println!("bound_bits={bits} psi_bound={psi:.6} hypothesis={h}");
                    println!("within_bound={}", r.within_bound());
                }
                _ => println!("bound_bits=none"),
            }
            println!("serialized_bits={}", r.serialized_bits);
            if let (Some(stored), Some(accounted)) = (r.ri_stored_bits, r.ri_accounted_bits) {
                println!("ri_stored_bits={stored} ri_accounted_bits={accounted}");
            }
            println!("compression_ratio={:.3}", r.compression_ratio());
        }
    }
    Ok(())
}
