//! The flat multi-vector graph baseline: one proximity graph built and
//! searched with quantized Chamfer distance, without clusters, bridges or
//! shortcuts.

use crate::cluster::two_stage_cluster;
use crate::error::{Error, Result};
use crate::graph::{best_first, shares_neighbor, BuildParams, GemGraph, Scored, Visited};
use crate::metric::{encode, qch_unchecked, CodeSet, Codebook};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::search::{beam_search, rerank, SearchParams, SearchResult};
use crate::types::{normalize_corpus, Corpus, VectorSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MvgIndex<T> {
    params: BuildParams,
    corpus: Corpus<T>,
    codebook: Codebook<T>,
    codes: Vec<CodeSet>,
    graph: GemGraph,
}

impl<T: Scalar> MvgIndex<T> {
    /// Uses GEM's parameters: the same codebook (same `k1`, `k2` and seed),
    /// fan-out `f`, cap `M` and `ef_construction`. Sets are inserted in id
    /// order; each links to its `f` qCH-nearest predecessors.
    pub fn build(corpus: &Corpus<T>, params: &BuildParams) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let params = params.resolve(corpus.len(), corpus.total_vectors())?;
        let corpus = normalize_corpus(corpus, params.kind)?;
        let rng = SeededRng::new(params.seed);
        let (codebook, _) = two_stage_cluster(
            &corpus,
            params.k1(),
            params.k2(),
            params.sample_frac,
            params.kmeans_iters,
            params.kind,
            &mut rng.fork(0),
        )?;
        let codes: Vec<CodeSet> = corpus
            .sets()
            .iter()
            .map(|s| encode(s, &codebook))
            .collect::<Result<_>>()?;

        let mut graph = GemGraph::new(1, params.m, 0);
        let mut visited = Visited::default();
        for p in 0..corpus.len() as u32 {
            graph.add_vertex(vec![0]);
            if p == 0 {
                continue;
            }
            let qp = &codes[p as usize];
            let found = best_first(
                &graph,
                &[0],
                params.ef_construction,
                &mut visited,
                |x| x != p,
                |x| qch_unchecked(qp, &codes[x as usize], &codebook),
            );
            for s in found.iter().take(params.f()) {
                let n = s.1;
                if graph.link(p, n) && graph.regular_degree(n) > params.m {
                    evict_by_qch(&mut graph, &codes, &codebook, n, p);
                }
            }
        }
        Ok(Self {
            params,
            corpus,
            codebook,
            codes,
            graph,
        })
    }

    /// Single-entry beam search from the lowest live vertex, no cluster
    /// filter, followed by the exact rerank.
    pub fn search(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult> {
        params.validate()?;
        query.check_dim(self.corpus.dim())?;
        let entry = (0..self.graph.len() as u32)
            .find(|&v| self.graph.is_live(v))
            .ok_or(Error::EmptyGraph)?;
        let query = query.prepared(self.params.kind)?;
        let codes = encode(&query, &self.codebook)?;
        let (heap, mut stats) = beam_search(
            &codes,
            &self.graph,
            &self.codes,
            &self.codebook,
            &[entry],
            None,
            params.ef_search,
            params.max_threads,
        )?;
        let hits = rerank(
            &query,
            &heap,
            &self.corpus,
            self.params.kind,
            params.rerank_k,
            params.k,
            &mut stats,
        )?;
        Ok(SearchResult { hits, stats })
    }

    pub fn delete(&mut self, id: u64) -> Result<()> {
        self.graph.tombstone(id)
    }

    pub fn graph(&self) -> &GemGraph {
        &self.graph
    }

    pub fn codebook(&self) -> &Codebook<T> {
        &self.codebook
    }

    pub fn corpus(&self) -> &Corpus<T> {
        &self.corpus
    }
}

/// Drops one edge of `x`, never the edge to `protect`. Among edges that
/// lie on a triangle the one with the largest `qCH(x, y)` goes (ties by
/// largest id); only when no such edge exists does the farthest edge go.
/// Triangle edges can be removed without splitting the graph.
fn evict_by_qch<T: Scalar>(
    graph: &mut GemGraph,
    codes: &[CodeSet],
    codebook: &Codebook<T>,
    x: u32,
    protect: u32,
) {
    let mut ranked: Vec<Scored> = graph
        .regular_neighbors(x)
        .filter(|&y| y != protect)
        .map(|y| {
            Scored(
                qch_unchecked(&codes[x as usize], &codes[y as usize], codebook),
                y,
            )
        })
        .collect();
    ranked.sort_unstable_by(|a, b| b.cmp(a));
    let victim = ranked
        .iter()
        .find(|s| shares_neighbor(graph, x, s.1))
        .or(ranked.first())
        .map(|s| s.1);
    if let Some(v) = victim {
        graph.unlink(x, v);
    }
}
