//! Query processing: centroid relevance filtering, multi-entry beam search
//! under quantized Chamfer distance, and exact Chamfer reranking.
//!
//! The beam search advances all entry paths in synchronized rounds. In a
//! round every live path pops its closest element against the bound `tau`
//! taken at the start of the round, claims unvisited neighbors in path
//! order, and the claimed distances are then computed (optionally on
//! several threads) and inserted sequentially. The traversal is therefore
//! the same for any thread count.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::IndexedRandom;

use crate::cluster::ClusterSpace;
use crate::error::{Error, Result};
use crate::graph::{GemGraph, GemIndex};
use crate::metric::{chamfer_similarity, encode, qch_unchecked, CodeSet, Codebook};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::types::{Corpus, SetId, SimilarityKind, VectorSet};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_EF_SEARCH: usize = 64;
pub const DEFAULT_RERANK_K: usize = 4 * DEFAULT_K;

/// Claimed batches smaller than this are scored on the calling thread.
const PARALLEL_MIN_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub k: usize,
    /// Top centroids kept per query token.
    pub t: usize,
    pub ef_search: usize,
    pub rerank_k: usize,
    /// Lowest live member per cluster as entry instead of a seeded draw.
    pub deterministic: bool,
    pub max_threads: usize,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            t: crate::graph::DEFAULT_FILTER_T,
            ef_search: DEFAULT_EF_SEARCH,
            rerank_k: DEFAULT_RERANK_K,
            deterministic: false,
            max_threads: 1,
            seed: 0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.k && self.k <= self.rerank_k && self.rerank_k <= self.ef_search) {
            return Err(Error::InvalidParams(format!(
                "need 1 <= k <= rerank_k <= ef_search, got k={}, rerank_k={}, ef_search={}",
                self.k, self.rerank_k, self.ef_search
            )));
        }
        if self.t == 0 {
            return Err(Error::InvalidParams("t must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameters that make the search exhaustive on an index of `n` sets
    /// with `k2` clusters.
    pub fn exhaustive(k: usize, n: usize, k2: usize) -> Self {
        let n = n.max(k);
        Self {
            k,
            t: k2.max(1),
            ef_search: n,
            rerank_k: n,
            deterministic: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub qch_evals: u64,
    pub exact_evals: u64,
    /// Expanded vertices.
    pub hops: u64,
    /// Neighbors skipped because none of their clusters was selected.
    pub pruned: u64,
}

impl std::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, o: Self) {
        self.qch_evals += o.qch_evals;
        self.exact_evals += o.exact_evals;
        self.hops += o.hops;
        self.pruned += o.pruned;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// `(id, Chamfer similarity)`, descending similarity, ties by ascending id.
    pub hits: Vec<(SetId, f64)>,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn ids(&self) -> Vec<SetId> {
        self.hits.iter().map(|&(id, _)| id).collect()
    }
}

/// A vertex in the result heap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: u32,
    pub qch: f64,
    /// Edges between the vertex and the entry of the path that found it.
    pub depth: u32,
    /// Expansions performed when the vertex was discovered.
    pub discovered_after: u64,
}

/// The result heap `R`: live candidates ascending by `(qch, id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateHeap {
    items: Vec<Candidate>,
}

impl CandidateHeap {
    pub fn items(&self) -> &[Candidate] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Candidate> {
        self.items.iter().find(|c| c.id == id)
    }

    fn furthest(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.qch)
    }

    fn offer(&mut self, c: Candidate, cap: usize) {
        let key = |x: &Candidate| (x.qch, x.id);
        if self.items.len() >= cap
            && cmp_key(key(&c), key(self.items.last().expect("cap >= 1"))) != Ordering::Less
        {
            return;
        }
        let at = self
            .items
            .partition_point(|x| cmp_key(key(x), key(&c)) == Ordering::Less);
        self.items.insert(at, c);
        self.items.truncate(cap);
    }
}

fn cmp_key(a: (f64, u32), b: (f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_key((self.0, self.1), (other.0, other.1))
    }
}

/// `C_query`: the union over query tokens of each token's top-`t` coarse
/// centroids by similarity (ties to the lower index), ascending.
pub fn cluster_filter<T: Scalar>(
    query: &VectorSet<T>,
    space: &ClusterSpace<T>,
    t: usize,
) -> Result<Vec<u32>> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    if t == 0 {
        return Err(Error::InvalidParams("t must be at least 1".into()));
    }
    let centroids = space.index_centroids();
    if let Some(c) = centroids.first() {
        query.check_dim(c.len())?;
    }
    let kind = space.kind();
    let mut selected = vec![false; centroids.len()];
    let mut scores: Vec<(f64, u32)> = Vec::with_capacity(centroids.len());
    for q in query.vectors() {
        scores.clear();
        scores.extend(
            centroids
                .iter()
                .enumerate()
                .map(|(j, c)| (kind.similarity(q, c), j as u32)),
        );
        scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, j) in scores.iter().take(t) {
            selected[j as usize] = true;
        }
    }
    Ok((0..centroids.len() as u32)
        .filter(|&j| selected[j as usize])
        .collect())
}

fn intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => return true,
        }
    }
    false
}

/// One entry per selected cluster: its lowest live member, or a seeded
/// random live member. Duplicates are dropped, order follows the clusters.
pub fn select_entries(
    graph: &GemGraph,
    c_query: &[u32],
    deterministic: bool,
    rng: &mut SeededRng,
) -> Vec<u32> {
    let mut entries: Vec<u32> = Vec::with_capacity(c_query.len());
    for &c in c_query {
        let pick = if deterministic {
            graph.members(c).iter().copied().find(|&v| graph.is_live(v))
        } else {
            let live: Vec<u32> = graph
                .members(c)
                .iter()
                .copied()
                .filter(|&v| graph.is_live(v))
                .collect();
            live.choose(rng).copied()
        };
        if let Some(v) = pick {
            if !entries.contains(&v) {
                entries.push(v);
            }
        }
    }
    entries
}

/// Cluster-guided beam search. `filter` restricts expansion to vertices
/// whose `C_top` meets it; `None` disables cluster pruning. Tombstoned
/// vertices are traversed but never enter the result heap.
#[allow(clippy::too_many_arguments)]
pub fn beam_search<T: Scalar>(
    query: &CodeSet,
    graph: &GemGraph,
    codes: &[CodeSet],
    codebook: &Codebook<T>,
    entries: &[u32],
    filter: Option<&[u32]>,
    ef: usize,
    threads: usize,
) -> Result<(CandidateHeap, SearchStats)> {
    if graph.live_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if ef == 0 {
        return Err(Error::InvalidParams("ef must be at least 1".into()));
    }
    let mut stats = SearchStats::default();
    let mut result = CandidateHeap::default();
    let mut visited = vec![false; graph.len()];
    let mut depth = vec![0u32; graph.len()];
    let mut paths: Vec<BinaryHeap<Reverse<Key>>> = Vec::with_capacity(entries.len());

    for &e in entries {
        if visited[e as usize] {
            continue;
        }
        visited[e as usize] = true;
        let d = qch_unchecked(query, &codes[e as usize], codebook);
        stats.qch_evals += 1;
        paths.push(BinaryHeap::from([Reverse(Key(d, e))]));
        if graph.is_live(e) {
            result.offer(
                Candidate {
                    id: e,
                    qch: d,
                    depth: 0,
                    discovered_after: 0,
                },
                ef,
            );
        }
    }

    let mut claims: Vec<(usize, u32)> = Vec::new();
    let mut dists: Vec<f64> = Vec::new();
    while paths.iter().any(|w| !w.is_empty()) {
        let tau = if result.len() >= ef {
            result.furthest()
        } else {
            f64::INFINITY
        };
        claims.clear();
        for (p, w) in paths.iter_mut().enumerate() {
            let Some(Reverse(Key(d, v))) = w.pop() else {
                continue;
            };
            if d > tau {
                w.clear();
                continue;
            }
            stats.hops += 1;
            for e in graph.neighbors(v) {
                let n = e.to;
                if visited[n as usize] {
                    continue;
                }
                visited[n as usize] = true;
                if let Some(f) = filter {
                    if !intersects(graph.membership(n), f) {
                        stats.pruned += 1;
                        continue;
                    }
                }
                depth[n as usize] = depth[v as usize] + 1;
                claims.push((p, n));
            }
        }

        score_claims(query, codes, codebook, &claims, threads, &mut dists);
        stats.qch_evals += claims.len() as u64;
        for (&(p, n), &d) in claims.iter().zip(&dists) {
            paths[p].push(Reverse(Key(d, n)));
            if graph.is_live(n) {
                result.offer(
                    Candidate {
                        id: n,
                        qch: d,
                        depth: depth[n as usize],
                        discovered_after: stats.hops,
                    },
                    ef,
                );
            }
        }
    }
    Ok((result, stats))
}

fn score_claims<T: Scalar>(
    query: &CodeSet,
    codes: &[CodeSet],
    codebook: &Codebook<T>,
    claims: &[(usize, u32)],
    threads: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(claims.len(), 0.0);
    let score = |n: u32| qch_unchecked(query, &codes[n as usize], codebook);
    if threads <= 1 || claims.len() < PARALLEL_MIN_BATCH {
        for (o, &(_, n)) in out.iter_mut().zip(claims) {
            *o = score(n);
        }
        return;
    }
    let chunk = claims.len().div_ceil(threads);
    std::thread::scope(|s| {
        for (outs, ins) in out.chunks_mut(chunk).zip(claims.chunks(chunk)) {
            s.spawn(move || {
                for (o, &(_, n)) in outs.iter_mut().zip(ins) {
                    *o = score(n);
                }
            });
        }
    });
}

/// Scores the `rerank_k` best candidates with exact Chamfer similarity and
/// keeps the top `k`, ties by ascending id.
pub fn rerank<T: Scalar>(
    query: &VectorSet<T>,
    candidates: &CandidateHeap,
    corpus: &Corpus<T>,
    kind: SimilarityKind,
    rerank_k: usize,
    k: usize,
    stats: &mut SearchStats,
) -> Result<Vec<(SetId, f64)>> {
    let mut hits = Vec::with_capacity(rerank_k.min(candidates.len()));
    for c in candidates.items().iter().take(rerank_k) {
        let set = corpus
            .get(c.id as SetId)
            .ok_or(Error::UnknownDocId(c.id as SetId))?;
        hits.push((c.id as SetId, chamfer_similarity(query, set, kind)?));
        stats.exact_evals += 1;
    }
    sort_hits(&mut hits);
    hits.truncate(k);
    Ok(hits)
}

/// Descending score, ties by ascending id.
pub fn sort_hits(hits: &mut [(SetId, f64)]) {
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

impl<T: Scalar> GemIndex<T> {
    /// Full query pipeline. The query is normalized here in cosine mode.
    pub fn search(&self, query: &VectorSet<T>, params: &SearchParams) -> Result<SearchResult> {
        Ok(self.search_traced(query, params)?.0)
    }

    /// Like [`search`](Self::search) but also returns the result heap the
    /// rerank stage consumed.
    pub fn search_traced(
        &self,
        query: &VectorSet<T>,
        params: &SearchParams,
    ) -> Result<(SearchResult, CandidateHeap)> {
        params.validate()?;
        let graph = self.graph();
        if graph.live_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        query.check_dim(self.corpus().dim())?;
        let query = query.prepared(self.params().kind)?;
        let c_query = cluster_filter(&query, self.space(), params.t)?;
        let codes = encode(&query, self.codebook())?;
        let mut rng = SeededRng::new(params.seed);
        let mut entries = select_entries(graph, &c_query, params.deterministic, &mut rng);
        if entries.is_empty() {
            // None of the selected clusters has a live member.
            entries.extend((0..graph.len() as u32).find(|&v| graph.is_live(v)));
        }
        let (heap, mut stats) = beam_search(
            &codes,
            graph,
            self.codes(),
            self.codebook(),
            &entries,
            Some(&c_query),
            params.ef_search,
            params.max_threads,
        )?;
        let hits = rerank(
            &query,
            &heap,
            self.corpus(),
            self.params().kind,
            params.rerank_k,
            params.k,
            &mut stats,
        )?;
        Ok((SearchResult { hits, stats }, heap))
    }
}
