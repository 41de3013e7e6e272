//! End-to-end runs of the `gem` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gem_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gem"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn gem(args: &[&str]) -> Output {
    gem_in(Path::new("."), args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Files live in a temp dir that doubles as the working directory.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    /// A small corpus with queries, judgments and training pairs.
    fn new(extra: &[&str]) -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        let mut args = vec![
            "generate",
            "--corpus",
            "corpus.gemv",
            "--queries",
            "queries.gemv",
            "--qrels",
            "qrels.tsv",
            "--pairs",
            "pairs.tsv",
            "--train-queries",
            "train.gemv",
            "--n-sets",
            "200",
            "--dim",
            "8",
            "--n-queries",
            "20",
            "--n-training",
            "60",
        ];
        args.extend_from_slice(extra);
        f.ok(&args);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        gem_in(self.dir.path(), args)
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.run(args);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        stdout(&o)
    }

    fn build(&self, out: &str, extra: &[&str]) {
        let mut args = vec!["build", "--corpus", "corpus.gemv", "--out", out];
        args.extend_from_slice(extra);
        self.ok(&args);
    }
}

fn field(inspect: &str, name: &str) -> f64 {
    inspect
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name}\t")))
        .unwrap_or_else(|| panic!("no {name} in {inspect}"))
        .parse()
        .unwrap()
}

#[test]
fn eval_reports_the_three_metrics() {
    let f = Fixture::new(&[]);
    f.build(
        "i.gemi",
        &["--pairs", "pairs.tsv", "--train-queries", "train.gemv"],
    );
    let out = f.ok(&[
        "eval",
        "--index",
        "i.gemi",
        "--queries",
        "queries.gemv",
        "--qrels",
        "qrels.tsv",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "metric\tvalue");
    for (line, name) in lines[1..].iter().zip(["R@10", "MRR@10", "S@10"]) {
        let (k, v) = line.split_once('\t').unwrap();
        assert_eq!(k, name);
        assert!((0.0..=1.0).contains(&v.parse::<f64>().unwrap()));
    }
}

#[test]
fn query_writes_ranked_tsv_and_jsonl() {
    let f = Fixture::new(&[]);
    f.build("i.gemi", &[]);
    let tsv = f.ok(&[
        "query",
        "--index",
        "i.gemi",
        "--query",
        "queries.gemv",
        "--k",
        "3",
    ]);
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("query_id\trank\tdoc_id\tscore"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows[0][1], "1");
    assert_eq!(rows[2][1], "3");

    let jsonl = f.ok(&[
        "query",
        "--index",
        "i.gemi",
        "--query",
        "queries.gemv",
        "--k",
        "3",
        "--format",
        "jsonl",
    ]);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["rank"], 1);
    assert_eq!(first["doc_id"].to_string(), rows[0][2]);
}

#[test]
fn learned_cutoffs_shrink_cluster_membership() {
    let f = Fixture::new(&["--stopword-frac", "0.2"]);
    let common = [
        "--k2",
        "16",
        "--pairs",
        "pairs.tsv",
        "--train-queries",
        "train.gemv",
    ];
    f.build("adaptive.gemi", &common);
    let mut naive = common.to_vec();
    naive.push("--no-tfidf");
    f.build("naive.gemi", &naive);
    let a = f.ok(&["inspect", "--index", "adaptive.gemi"]);
    let n = f.ok(&["inspect", "--index", "naive.gemi"]);
    assert_eq!(field(&a, "k2"), 16.0);
    assert!(
        field(&a, "mean_c_top") < field(&n, "mean_c_top"),
        "{a}\n{n}"
    );
}

#[test]
fn insert_and_delete_update_the_file() {
    let f = Fixture::new(&[]);
    f.build("i.gemi", &[]);
    f.ok(&[
        "delete", "--index", "i.gemi", "--ids", "3,5", "--out", "d.gemi",
    ]);
    let d = f.ok(&["inspect", "--index", "d.gemi"]);
    assert_eq!(field(&d, "n"), 200.0);
    assert_eq!(field(&d, "live"), 198.0);
    let hits = f.ok(&[
        "query",
        "--index",
        "d.gemi",
        "--query",
        "queries.gemv",
        "--k",
        "50",
        "--rerank-k",
        "50",
    ]);
    assert!(hits
        .lines()
        .skip(1)
        .all(|l| !matches!(l.split('\t').nth(2), Some("3" | "5"))));

    // The last 20 sets of a larger corpus carry ids that continue the index.
    let gen = f.ok(&[
        "generate",
        "--corpus",
        "extra.gemv",
        "--queries",
        "q.gemv",
        "--qrels",
        "r.tsv",
        "--n-sets",
        "220",
        "--dim",
        "8",
        "--n-queries",
        "1",
        "--seed",
        "7",
    ]);
    assert!(gen.starts_with("generated 220"));
    let all = gem_core::io::load_corpus::<f32>(f.path("extra.gemv")).unwrap();
    let tail: Vec<_> = all.sets()[200..].to_vec();
    gem_core::io::save_vector_sets(&tail, f.path("tail.gemv")).unwrap();
    f.ok(&["insert", "--index", "d.gemi", "--sets", "tail.gemv"]);
    let after = f.ok(&["inspect", "--index", "d.gemi"]);
    assert_eq!(field(&after, "n"), 220.0);
    assert_eq!(field(&after, "live"), 218.0);
}

#[test]
fn bench_runs_every_system() {
    let f = Fixture::new(&[]);
    f.build("i.gemi", &[]);
    for system in ["gem", "mvg", "brute"] {
        let out = f.ok(&[
            "bench",
            "--index",
            system,
            "--index-file",
            "i.gemi",
            "--queries",
            "queries.gemv",
            "--qrels",
            "qrels.tsv",
        ]);
        let row = out.lines().nth(1).unwrap();
        assert!(row.starts_with(system), "{out}");
    }
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    assert_eq!(gem(&["--help"]).status.code(), Some(0));
    assert_eq!(gem(&["build", "--help"]).status.code(), Some(0));
    assert_eq!(gem(&["build", "--bogus"]).status.code(), Some(1));
    assert_eq!(gem(&[]).status.code(), Some(1));

    let f = Fixture::new(&[]);
    f.build("i.gemi", &[]);
    let bad_param = f.run(&[
        "query",
        "--index",
        "i.gemi",
        "--query",
        "queries.gemv",
        "--k",
        "0",
    ]);
    assert_eq!(bad_param.status.code(), Some(1));

    let missing = f.run(&["inspect", "--index", "absent.gemi"]);
    assert_eq!(missing.status.code(), Some(2));
    let not_index = f.run(&["inspect", "--index", "qrels.tsv"]);
    assert_eq!(not_index.status.code(), Some(2));
    let wrong_id = f.run(&["delete", "--index", "i.gemi", "--ids", "999"]);
    assert_eq!(wrong_id.status.code(), Some(2));

    let mut bytes = std::fs::read(f.path("i.gemi")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    std::fs::write(f.path("bad.gemi"), bytes).unwrap();
    let corrupt = f.run(&["inspect", "--index", "bad.gemi"]);
    assert_eq!(corrupt.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&corrupt.stderr).contains("checksum"));
}

#[test]
fn f64_indexes_are_detected_from_the_header() {
    let f = Fixture::new(&[]);
    f.build("wide.gemi", &["--precision", "f64", "--metric", "l2"]);
    let out = f.ok(&["inspect", "--index", "wide.gemi"]);
    assert_eq!(field(&out, "scalar_bytes"), 8.0);
    assert!(out.contains("metric\tl2"));
    f.ok(&["query", "--index", "wide.gemi", "--query", "queries.gemv"]);
}
