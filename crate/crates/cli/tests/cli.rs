use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridrpq::fixture;

fn gridrpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridrpq")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Fixture {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let (v, e) = fixture::tsv();
        fs::write(root.join("v.tsv"), v).unwrap();
        fs::write(root.join("e.tsv"), e).unwrap();
        let f = Fixture { _tmp: tmp, root };
        let out = gridrpq(&["build", "--vertices", &f.path("v.tsv"), "--edges", &f.path("e.tsv"), "--out", &f.store(), "--theta", "4"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        f
    }

    fn path(&self, p: &str) -> String {
        self.root.join(p).to_string_lossy().into_owned()
    }

    fn store(&self) -> String {
        self.path("store")
    }
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn build_reports_three_grids() {
    let f = Fixture::new();
    let out = gridrpq(&["build", "--vertices", &f.path("v.tsv"), "--edges", &f.path("e.tsv"), "--out", &f.path("again"), "--theta", "4"]);
    assert_eq!(stdout(&out), "vertices=14\ngrids=a,b,c\n");
    assert_eq!(file_names(Path::new(&f.store())), file_names(Path::new(&f.path("again"))));
}

#[test]
fn rpq_counts_and_traces() {
    let f = Fixture::new();
    let store = f.store();
    let out = gridrpq(&["rpq", "--store", &store, "-q", "abc*", "--static-hop", "3", "--batch-size", "1", "--trace"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        [
            "iter=1 tg=0 batch=0 depth=0 range=[0,1)",
            "iter=2 tg=2 batch=0 depth=3 range=[0,1)",
            "iter=3 tg=0 batch=1 depth=0 range=[2,3)",
            "iter=4 tg=3 batch=0 depth=3 range=[2,3)",
            "iter=5 tg=1 batch=0 depth=0 range=[7,8)",
            "iter=6 tg=4 batch=0 depth=3 range=[7,8)",
            "count=13",
        ]
    );
    let stats = String::from_utf8(out.stderr).unwrap();
    assert!(stats.contains("max_hops=6"));
    assert!(stats.contains("segments_leaked=0"));
    assert!(stats.contains("memory_estimate_bytes=6"));
}

#[test]
fn rpq_plans_agree_and_emit_pairs() {
    let f = Fixture::new();
    let store = f.store();
    let mut seen = Vec::new();
    for plan in ["forward", "reverse", "middle:1", "middle:2", "loop-cache:2"] {
        let out = gridrpq(&["rpq", "--store", &store, "-q", "abc*", "--plan", plan, "--emit-pairs"]);
        assert!(out.status.success(), "{plan}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        assert!(text.starts_with("count=13\n"));
        assert!(text.contains("v7\tv2\n"));
        seen.push(text);
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn rpq_single_source() {
    let f = Fixture::new();
    let out = gridrpq(&["rpq", "--store", &f.store(), "-q", "abc*", "--source", "v7", "--emit-pairs"]);
    assert_eq!(stdout(&out), "count=2\nv7\tv2\nv7\tv3\n");
    let out = gridrpq(&["rpq", "--store", &f.store(), "-q", "abc*", "--source", "nobody"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stats_json_is_written() {
    let f = Fixture::new();
    let json = f.path("s.json");
    let out = gridrpq(&["rpq", "--store", &f.store(), "-q", "abc*", "--stats-json", &json]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["segments_leaked"], 0);
    assert_eq!(v["memory_estimate_bytes"], 6);
}

#[test]
fn crpq_counts() {
    let f = Fixture::new();
    let out = gridrpq(&["crpq", "--store", &f.store(), "-q", fixture::TRIANGLE_CRPQ]);
    assert_eq!(stdout(&out), "count=4\n");
    fs::write(f.path("q.crpq"), fixture::TRIANGLE_CRPQ_DISTINCT).unwrap();
    let out = gridrpq(&["crpq", "--store", &f.store(), "--query-file", &f.path("q.crpq"), "--emit-pairs", "--order", "u3,u2,u4"]);
    assert_eq!(stdout(&out), "count=2\nu2\tu3\tu4\nv10\tv0\tv12\nv12\tv0\tv10\n");
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let store = f.store();
    let code = |args: &[&str]| gridrpq(args).status.code();
    assert_eq!(code(&["rpq", "--store", &store, "-q", "abz"]), Some(2));
    assert_eq!(code(&["rpq", "--store", &store, "-q", "a(b"]), Some(2));
    assert_eq!(code(&["crpq", "--store", &store, "-q", "CRPQ t { vertex x; vertex y; edge x -[z]-> y; }"]), Some(2));
    assert_eq!(code(&["rpq", "--store", &f.path("missing"), "-q", "a"]), Some(3));
    fs::write(f.path("bad.tsv"), "v0\n").unwrap();
    assert_eq!(code(&["build", "--vertices", &f.path("bad.tsv"), "--edges", &f.path("e.tsv"), "--out", &f.path("x")]), Some(3));
    assert_eq!(code(&["rpq", "--store", &store, "-q", "abc*", "--input-buffer", "10"]), Some(4));
    assert_eq!(code(&["rpq", "--store", &store, "-q", "abc*", "--segment-buffer", "8"]), Some(4));
}

#[test]
fn verify_passes_and_catches_the_skipped_bridge() {
    let out = gridrpq(&["verify", "--trials", "20", "--seed", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("mismatches=0\nPASS"));
    let out = gridrpq(&["verify", "--family", "chain", "--trials", "3", "--static-hop", "2"]);
    assert!(out.status.success());
    let out = gridrpq(&["verify", "--family", "crpq", "--trials", "20"]);
    assert!(out.status.success());

    let f = Fixture::new();
    let args = |fault: bool| {
        let mut a = vec![
            "verify".to_string(), "--vertices".into(), f.path("v.tsv"), "--edges".into(), f.path("e.tsv"),
            "-q".into(), "abc*".into(), "--trials".into(), "1".into(), "--static-hop".into(), "3".into(),
            "--batch-size".into(), "1".into(), "--input-buffer".into(), "110".into(),
        ];
        if fault {
            a.extend(["--fault".into(), "skip-bridge".into()]);
        }
        a
    };
    let run = |a: Vec<String>| Command::new(env!("CARGO_BIN_EXE_gridrpq")).args(a).output().unwrap();
    assert!(run(args(false)).status.success());
    let bad = run(args(true));
    assert_eq!(bad.status.code(), Some(5));
    let text = stdout(&bad);
    assert!(text.contains("FAIL\nquery: abc*"));
    assert!(text.contains("- v0\tv9\n"));
}

#[test]
fn bench_rows_respect_the_segment_budget() {
    let out = gridrpq(&[
        "bench", "--vertices", "120", "--density", "0.02", "-q", "abc*;a*", "--segment-sweep", "65536,2048",
        "--ur-sweep", "1024,65536", "--materialize-mode", "overlap",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        assert_eq!(&r[col("status")], "ok");
        let peak: usize = r[col("segments_peak_bytes")].parse().unwrap();
        let budget: usize = r[col("segment_buffer")].parse().unwrap();
        assert!(peak <= budget);
    }
    for q in ["abc*", "a*"] {
        let counts: Vec<&str> = rows.iter().filter(|r| &r[0] == q).map(|r| &r[col("count")]).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{q}: {counts:?}");
    }
}
