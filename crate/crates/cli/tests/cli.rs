use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = "1,0,4,0,0\n0,10,0,0,0\n2,3,0,0,5\n0,0,0,0,0\n0,0,0,0,6\n";

fn sham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sham"))
        .args(args)
        .env_remove("SHAM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, contents: impl AsRef<[u8]>) -> PathBuf {
        let p = self.0.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 40 x 60 matrix with a deterministic spread of values.
fn synthetic_csv() -> String {
    synthetic_csv_sized(40, 60)
}

fn synthetic_csv_sized(n: usize, m: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..m)
            .map(|j| {
                let v = ((i * 7919 + j * 104_729) % 10_007) as f32 / 5003.5 - 1.0;
                v.to_string()
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn csc_json_report_matches_the_example() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let out = d.path("ex.shamz");
    let o = sham(&[
        "compress",
        s(&input),
        "--out",
        s(&out),
        "--format",
        "csc",
        "--report",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["format"], "csc");
    assert_eq!(report["q"], 7);
    // b(2q + m + 1) with b = 32.
    assert_eq!(report["actual_bits"], 32 * (2 * 7 + 5 + 1));

    let back = d.path("back.csv");
    let o = sham(&["decompress", s(&out), "--out", s(&back)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(back).unwrap(), EXAMPLE);
}

#[test]
fn compress_then_verify_passes_for_every_format() {
    let d = Dir::new();
    let input = d.file("w.csv", synthetic_csv());
    for format in ["ham", "sham", "csc", "imap", "auto"] {
        let out = d.path(&format!("{format}.shamz"));
        let q = d.path(&format!("{format}.q.bin"));
        let o = sham(&[
            "compress",
            s(&input),
            "--out",
            s(&out),
            "--format",
            format,
            "--prune-p",
            "80",
            "--quant",
            "cws",
            "--k",
            "8",
            "--word-bits",
            "64",
            "--quantized-out",
            s(&q),
        ]);
        assert!(o.status.success(), "{format}: {}", stderr(&o));
        let o = sham(&["verify", s(&out), s(&q)]);
        assert_eq!(o.status.code(), Some(0), "{format}: {}", stdout(&o));
    }
}

#[test]
fn lossless_verify_against_the_original() {
    let d = Dir::new();
    let input = d.file("w.csv", synthetic_csv());
    let out = d.path("w.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "ham"])
        .status
        .success());
    let o = sham(&["verify", s(&out), s(&input)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_reports_a_mismatch() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let other = d.file("other.csv", EXAMPLE.replace("10", "11"));
    let out = d.path("ex.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "sham"])
        .status
        .success());
    let o = sham(&["verify", s(&out), s(&other)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(1, 1)"), "{}", stdout(&o));
}

#[test]
fn flipped_stream_bit_fails_verification() {
    let d = Dir::new();
    let input = d.file("w.csv", synthetic_csv());
    let out = d.path("w.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "ham"])
        .status
        .success());
    let clean = fs::read(&out).unwrap();
    let mut failures = 0;
    // Flip one bit in each of several bytes near the end of the stream.
    for back in [9usize, 17, 33, 101] {
        let mut bytes = clean.clone();
        let at = bytes.len() - back;
        bytes[at] ^= 0x10;
        let bad = d.file("bad.shamz", &bytes);
        let o = sham(&["verify", s(&bad), s(&input)]);
        let code = o.status.code();
        assert!(code == Some(1) || code == Some(3), "flip at {at}: exit {code:?}");
        assert!(!stdout(&o).is_empty() || !stderr(&o).is_empty());
        failures += 1;
    }
    assert_eq!(failures, 4);
}

#[test]
fn truncated_container_is_corrupt() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let out = d.path("ex.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "sham"])
        .status
        .success());
    let bytes = fs::read(&out).unwrap();
    for len in [0, 3, 20, bytes.len() / 2, bytes.len() - 1] {
        let cut = d.file("cut.shamz", &bytes[..len]);
        let o = sham(&["verify", s(&cut), s(&input)]);
        assert_eq!(o.status.code(), Some(3), "length {len}: {}", stderr(&o));
        assert!(stderr(&o).contains("corrupt container"), "{}", stderr(&o));
    }
}

#[test]
fn dot_with_a_unit_vector_returns_the_first_row() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let out = d.path("ex.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "ham"])
        .status
        .success());
    let e1 = d.file("e1.csv", "1,0,0,0,0\n");
    let o = sham(&["dot", s(&out), s(&e1), "--runs", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1,0,4,0,0\n");

    // The same vector as a column.
    let col = d.file("col.csv", "1\n0\n0\n0\n0\n");
    assert_eq!(stdout(&sham(&["dot", s(&out), s(&col), "--runs", "0"])), "1,0,4,0,0\n");
}

#[test]
fn dot_output_is_identical_across_thread_counts() {
    let d = Dir::new();
    let input = d.file("w.csv", synthetic_csv());
    let out = d.path("w.shamz");
    let o = sham(&[
        "compress",
        s(&input),
        "--out",
        s(&out),
        "--format",
        "sham",
        "--prune-p",
        "90",
        "--quant",
        "cws",
        "--k",
        "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut vectors = String::new();
    for r in 0..8 {
        let row: Vec<String> = (0..40)
            .map(|i| (((r * 37 + i * 11) % 23) as f32 / 7.0 - 1.5).to_string())
            .collect();
        vectors.push_str(&row.join(","));
        vectors.push('\n');
    }
    let x = d.file("x.csv", vectors);
    let (one, eight) = (d.path("one.csv"), d.path("eight.csv"));
    let o = sham(&["dot", s(&out), s(&x), "--threads", "1", "--out", s(&one)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("median"), "{}", stderr(&o));
    assert!(sham(&[
        "dot",
        s(&out),
        s(&x),
        "--threads",
        "8",
        "--runs",
        "0",
        "--out",
        s(&eight)
    ])
    .status
    .success());
    let a = fs::read(&one).unwrap();
    assert_eq!(a, fs::read(&eight).unwrap());
    // 8 vectors against a 40 x 60 matrix.
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.split(',').count() == 60));
}

#[test]
fn dot_rejects_wrong_length() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let out = d.path("ex.shamz");
    assert!(sham(&["compress", s(&input), "--out", s(&out), "--format", "csc"])
        .status
        .success());
    let x = d.file("x.csv", "1,2,3\n");
    let o = sham(&["dot", s(&out), s(&x)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn auto_picks_sham_for_a_sparse_matrix() {
    let d = Dir::new();
    // s = 0.05 against a crossover of about 0.081 for k = 4.
    let input = d.file("w.csv", synthetic_csv_sized(200, 200));
    let out = d.path("w.shamz");
    let o = sham(&[
        "compress",
        s(&input),
        "--out",
        s(&out),
        "--prune-p",
        "95",
        "--quant",
        "cws",
        "--k",
        "4",
        "--report",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["format"], "sham");
    assert!(report["actual_bits"].as_u64().unwrap() <= report["bound_bits"].as_u64().unwrap());
}

#[test]
fn seed_comes_from_the_environment() {
    let d = Dir::new();
    let input = d.file("w.csv", synthetic_csv());
    let run = |seed: Option<&str>, name: &str| {
        let out = d.path(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sham"));
        cmd.args([
            "compress",
            s(&input),
            "--out",
            s(&out),
            "--quant",
            "pws",
            "--k",
            "4",
            "--format",
            "ham",
        ]);
        match seed {
            Some(v) => cmd.env("SHAM_SEED", v),
            None => cmd.env_remove("SHAM_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run(Some("5"), "a.shamz"), run(Some("5"), "b.shamz"));
    assert_ne!(run(Some("5"), "c.shamz"), run(Some("6"), "d.shamz"));
}

#[test]
fn bounds_from_parameters() {
    let o = sham(&["bounds", "--n", "512", "--m", "4096", "--k", "32", "--s", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("crossover_s=0.156250"), "{}", stdout(&o));
    assert_eq!(sham(&["bounds", "--n", "512"]).status.code(), Some(2));
}

#[test]
fn stats_on_the_example() {
    let d = Dir::new();
    let input = d.file("ex.csv", EXAMPLE);
    let o = sham(&["stats", s(&input)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("nonzeros=7 s=0.280000"), "{text}");
    assert!(text.contains("distinct=8 distinct_nonzero=7"), "{text}");
}

#[test]
fn empty_grid_gives_an_empty_report() {
    let d = Dir::new();
    let spec = d.file("empty.sweep", "# nothing to run\nsizes =\n");
    let out = d.path("r.csv");
    let o = sham(&["sweep", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() <= 1, "{text}");
    let o = sham(&["sweep", s(&spec), "--report", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().map(Vec::len), Some(0));
}

#[test]
fn small_sweep_emits_one_row_per_cell() {
    let d = Dir::new();
    let spec = d.file(
        "s.sweep",
        "sizes = 32x64\nprune = 60, 90\nk = 4\nmethods = cws\nformats = ham, sham, csc, imap\ndot_runs = 5\nvectors = 2\n",
    );
    let o = sham(&["sweep", s(&spec), "--report", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    for r in &rows {
        assert!(r[col("error")].is_empty(), "{r:?}");
        assert!(!r[col("dot_ns_median")].is_empty());
    }
}

#[test]
fn bad_sweep_spec_is_a_usage_error() {
    let d = Dir::new();
    let spec = d.file("bad.sweep", "sizes = 10x10\ncolour = blue\n");
    let o = sham(&["sweep", s(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
