//! `gem`: build, query, evaluate and maintain multi-vector indexes.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gem_core::cluster::{DEFAULT_FALLBACK_R, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF, DEFAULT_R_MAX};
use gem_core::eval::{run_benchmark, BruteForce, MetricReport, MvgIndex, Qrels, Retriever};
use gem_core::graph::{
    DEFAULT_DEGREE_CAP, DEFAULT_EF_CONSTRUCTION, DEFAULT_FILTER_T, DEFAULT_F_PRIME,
    DEFAULT_SHORTCUT_CAP, DEFAULT_SHORTCUT_FRAC,
};
use gem_core::io;
use gem_core::search::{DEFAULT_EF_SEARCH, DEFAULT_K, DEFAULT_RERANK_K};
use gem_core::synth::{generate, SynthConfig};
use gem_core::{BuildParams, Error, GemIndex, Scalar, SearchParams, SimilarityKind, VectorSet};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "gem",
    version,
    about = "Graph index for multi-vector retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an index from a vector-set file
    Build(BuildArgs),
    /// Answer queries from a vector-set file
    Query(QueryArgs),
    /// Report R@k, MRR@k and S@k against judgments
    Eval(EvalArgs),
    /// Time one retrieval system over a query file
    Bench(BenchArgs),
    /// Append sets to an index
    Insert(InsertArgs),
    /// Tombstone sets in an index
    Delete(DeleteArgs),
    /// Print index statistics
    Inspect(InspectArgs),
    /// Write a synthetic corpus, queries, judgments and training pairs
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Metric {
    Cosine,
    L2,
}

impl From<Metric> for SimilarityKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Cosine => SimilarityKind::Cosine,
            Metric::L2 => SimilarityKind::L2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum System {
    Gem,
    Mvg,
    Brute,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Codebook size; derived from the corpus size when omitted
    #[arg(long)]
    k1: Option<usize>,
    /// Number of coarse clusters; derived from the corpus size when omitted
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_EF_CONSTRUCTION)]
    ef_construction: usize,
    /// Neighbors linked per insertion; defaults to M
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SHORTCUT_FRAC)]
    shortcut_frac: f64,
    #[arg(long, default_value_t = DEFAULT_F_PRIME)]
    f_prime: usize,
    #[arg(long, default_value_t = DEFAULT_SHORTCUT_CAP)]
    shortcut_cap: usize,
    /// Training pairs, `query_id<TAB>doc_id`
    #[arg(long, requires = "train_queries")]
    pairs: Option<PathBuf>,
    /// Vector-set file holding the training queries named in --pairs
    #[arg(long, requires = "pairs")]
    train_queries: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    rmax: usize,
    #[arg(long, default_value_t = DEFAULT_FALLBACK_R)]
    fallback_r: usize,
    /// Keep every profile cluster instead of a learned cutoff
    #[arg(long)]
    no_tfidf: bool,
    #[arg(long, default_value_t = DEFAULT_FILTER_T)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Metric::Cosine)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    precision: Precision,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Query clusters used to filter the graph
    #[arg(long, default_value_t = DEFAULT_FILTER_T)]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_EF_SEARCH)]
    ef_search: usize,
    #[arg(long, default_value_t = DEFAULT_RERANK_K)]
    rerank_k: usize,
    /// Use fixed entry points instead of seeded random ones
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SearchArgs {
    fn params(&self) -> SearchParams {
        SearchParams {
            k: self.k,
            t: self.t,
            ef_search: self.ef_search,
            rerank_k: self.rerank_k,
            deterministic: self.deterministic,
            max_threads: self.threads,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Retrieval system to time
    #[arg(long, value_enum)]
    index: System,
    /// Index file; the flat baseline and the exact scan reuse its corpus and parameters
    #[arg(long)]
    index_file: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Args, Debug)]
struct InsertArgs {
    #[arg(long)]
    index: PathBuf,
    /// Vector-set file; ids must continue the index's id range
    #[arg(long)]
    sets: PathBuf,
    /// Write here instead of replacing the index file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DeleteArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    ids: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Judgments: each query's source document
    #[arg(long)]
    qrels: PathBuf,
    /// Training queries and pairs, written when --n-training > 0
    #[arg(long, requires = "train_queries")]
    pairs: Option<PathBuf>,
    #[arg(long, requires = "pairs")]
    train_queries: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    n_sets: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    n_queries: usize,
    #[arg(long, default_value_t = 0)]
    n_training: usize,
    #[arg(long, default_value_t = 8)]
    n_topics: usize,
    /// Share of document vectors replaced by corpus-wide common tokens
    #[arg(long, default_value_t = 0.0)]
    stopword_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(msg) => Failure::Usage(msg),
            e => Failure::Data(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(Error::from(e))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Build(a) => match a.precision {
            Precision::F32 => build::<f32>(&a, out),
            Precision::F64 => build::<f64>(&a, out),
        },
        Command::Generate(a) => generate_files(&a, out),
        Command::Query(a) => dispatch(&a.index, |w| match w {
            4 => query::<f32>(&a, out),
            _ => query::<f64>(&a, out),
        }),
        Command::Eval(a) => dispatch(&a.index, |w| match w {
            4 => eval::<f32>(&a, out),
            _ => eval::<f64>(&a, out),
        }),
        Command::Bench(a) => dispatch(&a.index_file, |w| match w {
            4 => bench::<f32>(&a, out),
            _ => bench::<f64>(&a, out),
        }),
        Command::Insert(a) => dispatch(&a.index, |w| match w {
            4 => insert::<f32>(&a, out),
            _ => insert::<f64>(&a, out),
        }),
        Command::Delete(a) => dispatch(&a.index, |w| match w {
            4 => delete::<f32>(&a, out),
            _ => delete::<f64>(&a, out),
        }),
        Command::Inspect(a) => dispatch(&a.index, |w| match w {
            4 => inspect::<f32>(&a, out),
            _ => inspect::<f64>(&a, out),
        }),
    }
}

/// Picks the scalar type recorded in an index header.
fn dispatch(path: &Path, f: impl FnOnce(u32) -> CmdResult) -> CmdResult {
    match io::index_scalar_width(path)? {
        w @ (4 | 8) => f(w),
        w => Err(Failure::Data(Error::Malformed(format!(
            "unsupported scalar width {w}"
        )))),
    }
}

fn build<T: Scalar>(a: &BuildArgs, out: &mut dyn Write) -> CmdResult {
    let corpus = io::load_corpus::<T>(&a.corpus)?;
    let pairs = match (&a.pairs, &a.train_queries) {
        (Some(p), Some(q)) => io::load_pairs(p, &io::load_vector_sets::<T>(q)?, corpus.len())?,
        _ => Vec::new(),
    };
    let params = BuildParams {
        kind: a.metric.into(),
        k1: a.k1,
        k2: a.k2,
        f: a.f,
        m: a.m,
        ef_construction: a.ef_construction,
        r_max: a.rmax,
        fallback_r: a.fallback_r,
        shortcut_frac: a.shortcut_frac,
        f_prime: a.f_prime,
        shortcut_cap: a.shortcut_cap,
        tfidf_pruning: !a.no_tfidf,
        tree_max_depth: DEFAULT_MAX_DEPTH,
        tree_min_leaf: DEFAULT_MIN_LEAF,
        filter_t: a.t,
        seed: a.seed,
        ..BuildParams::default()
    };
    let (index, report) = GemIndex::build_with_report(&corpus, &params, &pairs)?;
    io::save_index(&index, &a.out)?;
    writeln!(
        out,
        "built {} sets, {} edges, {} shortcuts ({} training pairs)",
        index.len(),
        index.graph().edge_count(),
        report.shortcuts_added,
        pairs.len()
    )?;
    Ok(())
}

fn query<T: Scalar>(a: &QueryArgs, out: &mut dyn Write) -> CmdResult {
    let index = io::load_index::<T>(&a.index)?;
    let queries = io::load_vector_sets::<T>(&a.query)?;
    let params = a.search.params();
    params.validate()?;
    if a.format == Format::Tsv {
        writeln!(out, "query_id\trank\tdoc_id\tscore")?;
    }
    for q in &queries {
        let res = index.search(q, &params)?;
        for (rank, &(doc, score)) in res.hits.iter().enumerate() {
            match a.format {
                Format::Tsv => writeln!(out, "{}\t{}\t{doc}\t{score:.6}", q.id(), rank + 1)?,
                Format::Jsonl => writeln!(
                    out,
                    "{}",
                    json!({"query_id": q.id(), "rank": rank + 1, "doc_id": doc, "score": score})
                )?,
            }
        }
    }
    Ok(())
}

fn load_eval_inputs<T: Scalar>(
    queries: &Path,
    qrels: &Path,
    n_docs: usize,
) -> Result<(Vec<VectorSet<T>>, Qrels), Failure> {
    let queries = io::load_vector_sets::<T>(queries)?;
    let qrels = io::load_qrels(qrels, n_docs)?;
    Ok((queries, qrels))
}

fn eval<T: Scalar>(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let index = io::load_index::<T>(&a.index)?;
    let (queries, qrels) = load_eval_inputs::<T>(&a.queries, &a.qrels, index.len())?;
    let report = run_benchmark(&index, &queries, &qrels, &a.search.params(), 1)?;
    let k = report.k;
    writeln!(out, "metric\tvalue")?;
    writeln!(out, "R@{k}\t{:.4}", report.recall_at_k)?;
    writeln!(out, "MRR@{k}\t{:.4}", report.mrr_at_k)?;
    writeln!(out, "S@{k}\t{:.4}", report.success_at_k)?;
    Ok(())
}

fn bench<T: Scalar>(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let index = io::load_index::<T>(&a.index_file)?;
    let (queries, qrels) = load_eval_inputs::<T>(&a.queries, &a.qrels, index.len())?;
    let params = a.search.params();
    let report = match a.index {
        System::Gem => run_benchmark(&index, &queries, &qrels, &params, a.repeats)?,
        System::Mvg => {
            let mut mvg = MvgIndex::build(index.corpus(), index.params())?;
            for (id, &dead) in index.graph().tombstones().iter().enumerate() {
                if dead {
                    mvg.delete(id as u64)?;
                }
            }
            run_benchmark(&mvg, &queries, &qrels, &params, a.repeats)?
        }
        System::Brute => {
            let brute: Box<dyn Retriever<T>> = Box::new(BruteForce::from_index(&index));
            run_benchmark(brute.as_ref(), &queries, &qrels, &params, a.repeats)?
        }
    };
    write_report(&report, a.format, out)
}

fn write_report(r: &MetricReport, format: Format, out: &mut dyn Write) -> CmdResult {
    match format {
        Format::Tsv => {
            writeln!(
                out,
                "system\tk\trecall\tmrr\tsuccess\tlatency_ms\tqch_evals\texact_evals\thops"
            )?;
            writeln!(
                out,
                "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.1}\t{:.1}\t{:.1}",
                r.system,
                r.k,
                r.recall_at_k,
                r.mrr_at_k,
                r.success_at_k,
                r.mean_latency_secs * 1e3,
                r.mean_qch_evals,
                r.mean_exact_evals,
                r.mean_hops
            )?;
        }
        Format::Jsonl => {
            for q in &r.per_query {
                writeln!(
                    out,
                    "{}",
                    json!({
                        "system": r.system,
                        "query_id": q.query,
                        "recall": q.recall,
                        "mrr": q.mrr,
                        "success": q.success,
                        "latency_secs": q.latency_secs,
                        "qch_evals": q.stats.qch_evals,
                        "exact_evals": q.stats.exact_evals,
                        "hops": q.stats.hops,
                        "hits": q.hits,
                    })
                )?;
            }
        }
    }
    Ok(())
}

fn insert<T: Scalar>(a: &InsertArgs, out: &mut dyn Write) -> CmdResult {
    let mut index = io::load_index::<T>(&a.index)?;
    let mut sets = io::load_vector_sets::<T>(&a.sets)?;
    sets.sort_by_key(VectorSet::id);
    for s in &sets {
        index.insert(s)?;
    }
    io::save_index(&index, a.out.as_ref().unwrap_or(&a.index))?;
    writeln!(
        out,
        "inserted {} sets, index now holds {}",
        sets.len(),
        index.len()
    )?;
    Ok(())
}

fn delete<T: Scalar>(a: &DeleteArgs, out: &mut dyn Write) -> CmdResult {
    let mut index = io::load_index::<T>(&a.index)?;
    for &id in &a.ids {
        index.delete(id)?;
    }
    io::save_index(&index, a.out.as_ref().unwrap_or(&a.index))?;
    writeln!(
        out,
        "deleted {} sets, {} live",
        a.ids.len(),
        index.graph().live_count()
    )?;
    Ok(())
}

fn inspect<T: Scalar>(a: &InspectArgs, out: &mut dyn Write) -> CmdResult {
    let index = io::load_index::<T>(&a.index)?;
    let g = index.graph();
    let p = index.params();
    let rows: [(&str, serde_json::Value); 11] = [
        ("metric", json!(p.kind.as_str())),
        ("scalar_bytes", json!(T::WIDTH)),
        ("k1", json!(p.k1())),
        ("k2", json!(p.k2())),
        ("n", json!(index.len())),
        ("live", json!(g.live_count())),
        ("edges", json!(g.edge_count())),
        ("shortcuts", json!(g.shortcut_count())),
        ("mean_c_top", json!(g.mean_membership())),
        ("mean_profile", json!(index.mean_profile_len())),
        ("mean_degree", json!(g.mean_degree())),
    ];
    match a.format {
        Format::Tsv => {
            writeln!(out, "field\tvalue")?;
            for (name, v) in &rows {
                match v.as_f64() {
                    Some(x) if v.is_f64() => writeln!(out, "{name}\t{x:.4}")?,
                    _ => writeln!(
                        out,
                        "{name}\t{}",
                        v.as_str().map_or_else(|| v.to_string(), str::to_string)
                    )?,
                }
            }
        }
        Format::Jsonl => {
            let obj: serde_json::Map<String, serde_json::Value> =
                rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            writeln!(out, "{}", serde_json::Value::Object(obj))?;
        }
    }
    Ok(())
}

fn generate_files(a: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    if a.n_training > 0 && a.pairs.is_none() {
        return Err(Failure::Usage(
            "--n-training needs --pairs and --train-queries".into(),
        ));
    }
    let data = generate::<f32>(&SynthConfig {
        n_sets: a.n_sets,
        dim: a.dim,
        n_queries: a.n_queries,
        n_training: a.n_training,
        n_topics: a.n_topics,
        stopword_frac: a.stopword_frac,
        seed: a.seed,
        ..SynthConfig::default()
    })?;
    io::save_corpus(&data.corpus, &a.corpus)?;
    io::save_vector_sets(&data.queries, &a.queries)?;
    let judged: Vec<(u64, u64)> = data
        .queries
        .iter()
        .map(VectorSet::id)
        .zip(data.targets.iter().copied())
        .collect();
    io::save_pairs(&judged, &a.qrels)?;
    if let (Some(p), Some(q)) = (&a.pairs, &a.train_queries) {
        let train: Vec<VectorSet<f32>> = data.training.iter().map(|t| t.query.clone()).collect();
        let pairs: Vec<(u64, u64)> = data
            .training
            .iter()
            .map(|t| (t.query.id(), t.positive))
            .collect();
        io::save_vector_sets(&train, q)?;
        io::save_pairs(&pairs, p)?;
    }
    writeln!(
        out,
        "generated {} sets, {} queries, {} training pairs",
        data.corpus.len(),
        data.queries.len(),
        data.training.len()
    )?;
    Ok(())
}
