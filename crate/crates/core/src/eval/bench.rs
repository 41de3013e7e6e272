//! Benchmark runner shared by GEM, the flat graph baseline and the exact
//! oracle.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::eval::metrics::{mrr_at_k, recall_at_k, success_at_k, Qrels};
use crate::eval::mvg::MvgIndex;
use crate::eval::oracle::brute_force_topk_filtered;
use crate::graph::GemIndex;
use crate::scalar::Scalar;
use crate::search::{SearchParams, SearchResult, SearchStats};
use crate::types::{normalize_corpus, Corpus, SetId, SimilarityKind, VectorSet};

/// Anything that answers top-k Chamfer queries.
pub trait Retriever<T> {
    fn name(&self) -> &'static str;
    fn retrieve(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult>;
}

impl<T: Scalar> Retriever<T> for GemIndex<T> {
    fn name(&self) -> &'static str {
        "gem"
    }

    fn retrieve(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult> {
        self.search(query, params)
    }
}

impl<T: Scalar> Retriever<T> for MvgIndex<T> {
    fn name(&self) -> &'static str {
        "mvg"
    }

    fn retrieve(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult> {
        self.search(query, params)
    }
}

/// Exhaustive exact scoring over a normalized copy of the corpus.
#[derive(Debug, Clone)]
pub struct BruteForce<T> {
    corpus: Corpus<T>,
    kind: SimilarityKind,
    live: Vec<bool>,
}

impl<T: Scalar> BruteForce<T> {
    pub fn new(corpus: &Corpus<T>, kind: SimilarityKind) -> Result<Self> {
        Ok(Self {
            corpus: normalize_corpus(corpus, kind)?,
            kind,
            live: vec![true; corpus.len()],
        })
    }

    /// Oracle over an index's stored corpus, skipping tombstoned sets.
    pub fn from_index(index: &GemIndex<T>) -> Self {
        Self {
            corpus: index.corpus().clone(),
            kind: index.params().kind,
            live: index.graph().tombstones().iter().map(|&t| !t).collect(),
        }
    }
}

impl<T: Scalar> Retriever<T> for BruteForce<T> {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn retrieve(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult> {
        if params.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let query = query.prepared(self.kind)?;
        let hits = brute_force_topk_filtered(&query, &self.corpus, params.k, self.kind, |id| {
            self.live[id as usize]
        })?;
        Ok(SearchResult {
            hits,
            stats: SearchStats {
                exact_evals: self.live.iter().filter(|&&l| l).count() as u64,
                ..SearchStats::default()
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMetrics {
    pub query: SetId,
    pub recall: f64,
    pub mrr: f64,
    pub success: f64,
    pub latency_secs: f64,
    pub stats: SearchStats,
    pub hits: Vec<SetId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub system: String,
    pub k: usize,
    pub recall_at_k: f64,
    pub mrr_at_k: f64,
    pub success_at_k: f64,
    /// Mean wall time of one search call, seconds.
    pub mean_latency_secs: f64,
    pub mean_qch_evals: f64,
    pub mean_exact_evals: f64,
    pub mean_hops: f64,
    pub per_query: Vec<QueryMetrics>,
}

/// Runs every query `repeats` times. Quality metrics come from the first
/// run; latency is the mean over all runs. Every query id must have qrels.
pub fn run_benchmark<T: Scalar, R: Retriever<T> + ?Sized>(
    retriever: &R,
    queries: &[VectorSet<T>],
    qrels: &Qrels,
    params: &SearchParams,
    repeats: usize,
) -> Result<MetricReport> {
    let repeats = repeats.max(1);
    let k = params.k;
    let mut per_query = Vec::with_capacity(queries.len());
    for q in queries {
        let g_q = qrels.get(q.id()).ok_or_else(|| {
            Error::InconsistentQrels(format!("query {} has no judgments", q.id()))
        })?;
        let mut first: Option<SearchResult> = None;
        let mut elapsed = 0.0;
        for _ in 0..repeats {
            let start = Instant::now();
            let res = retriever.retrieve(q, params)?;
            elapsed += start.elapsed().as_secs_f64();
            first.get_or_insert(res);
        }
        let res = first.expect("at least one repeat");
        let ids = res.ids();
        per_query.push(QueryMetrics {
            query: q.id(),
            recall: recall_at_k(&ids, g_q, k)?,
            mrr: mrr_at_k(&ids, g_q, k)?,
            success: success_at_k(&ids, g_q, k)?,
            latency_secs: elapsed / repeats as f64,
            stats: res.stats,
            hits: ids,
        });
    }
    let n = per_query.len().max(1) as f64;
    let mean = |f: &dyn Fn(&QueryMetrics) -> f64| per_query.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        system: retriever.name().to_string(),
        k,
        recall_at_k: mean(&|m| m.recall),
        mrr_at_k: mean(&|m| m.mrr),
        success_at_k: mean(&|m| m.success),
        mean_latency_secs: mean(&|m| m.latency_secs),
        mean_qch_evals: mean(&|m| m.stats.qch_evals as f64),
        mean_exact_evals: mean(&|m| m.stats.exact_evals as f64),
        mean_hops: mean(&|m| m.stats.hops as f64),
        per_query,
    })
}
