//! Exact Chamfer ranking over a whole corpus.

use crate::error::Result;
use crate::eval::metrics::Qrels;
use crate::metric::chamfer_similarity;
use crate::scalar::Scalar;
use crate::search::sort_hits;
use crate::types::{Corpus, SetId, SimilarityKind, VectorSet};

/// Top-`k` sets by exact Chamfer similarity, descending, ties by ascending
/// id. The query is used as given (normalize it first in cosine mode).
pub fn brute_force_topk<T: Scalar>(
    query: &VectorSet<T>,
    corpus: &Corpus<T>,
    k: usize,
    kind: SimilarityKind,
) -> Result<Vec<(SetId, f64)>> {
    brute_force_topk_filtered(query, corpus, k, kind, |_| true)
}

/// As [`brute_force_topk`] over the sets for which `live` holds.
pub fn brute_force_topk_filtered<T: Scalar>(
    query: &VectorSet<T>,
    corpus: &Corpus<T>,
    k: usize,
    kind: SimilarityKind,
    live: impl Fn(SetId) -> bool,
) -> Result<Vec<(SetId, f64)>> {
    let mut hits = Vec::with_capacity(corpus.len());
    for set in corpus.sets() {
        if live(set.id()) {
            hits.push((set.id(), chamfer_similarity(query, set, kind)?));
        }
    }
    sort_hits(&mut hits);
    hits.truncate(k);
    Ok(hits)
}

/// Qrels holding each query's exact top-`depth` ids. Queries are
/// normalized in cosine mode; ids come from the query sets.
pub fn oracle_qrels<T: Scalar>(
    queries: &[VectorSet<T>],
    corpus: &Corpus<T>,
    depth: usize,
    kind: SimilarityKind,
) -> Result<Qrels> {
    let corpus = crate::types::normalize_corpus(corpus, kind)?;
    let mut qrels = Qrels::new();
    for q in queries {
        let q_prepared = q.prepared(kind)?;
        for (doc, _) in brute_force_topk(&q_prepared, &corpus, depth, kind)? {
            qrels.insert(q.id(), doc);
        }
    }
    Ok(qrels)
}
