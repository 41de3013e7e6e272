//! Recall, reciprocal rank and success at a cutoff, plus query relevance
//! judgments.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::types::SetId;

/// Relevant document ids per query id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    map: BTreeMap<SetId, BTreeSet<SetId>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: SetId, doc: SetId) {
        self.map.entry(query).or_default().insert(doc);
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (SetId, SetId)>) -> Self {
        let mut q = Self::new();
        for (query, doc) in pairs {
            q.insert(query, doc);
        }
        q
    }

    pub fn get(&self, query: SetId) -> Option<&BTreeSet<SetId>> {
        self.map.get(&query)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SetId, &BTreeSet<SetId>)> + '_ {
        self.map.iter().map(|(&q, d)| (q, d))
    }

    /// `(query, doc)` pairs in ascending order.
    pub fn pairs(&self) -> impl Iterator<Item = (SetId, SetId)> + '_ {
        self.map
            .iter()
            .flat_map(|(&q, docs)| docs.iter().map(move |&d| (q, d)))
    }

    /// Rejects documents outside `0..n_docs`.
    pub fn validate(&self, n_docs: usize) -> Result<()> {
        match self.pairs().find(|&(_, d)| d as usize >= n_docs) {
            Some((_, d)) => Err(Error::UnknownDocId(d)),
            None => Ok(()),
        }
    }
}

fn top(results: &[SetId], k: usize) -> &[SetId] {
    &results[..k.min(results.len())]
}

fn check(g_q: &BTreeSet<SetId>) -> Result<()> {
    if g_q.is_empty() {
        Err(Error::EmptyGroundTruth)
    } else {
        Ok(())
    }
}

/// `|G_Q ∩ R_Q^(k)| / |G_Q|`.
pub fn recall_at_k(results: &[SetId], g_q: &BTreeSet<SetId>, k: usize) -> Result<f64> {
    check(g_q)?;
    let hit = top(results, k)
        .iter()
        .filter(|id| g_q.contains(id))
        .collect::<BTreeSet<_>>()
        .len();
    Ok(hit as f64 / g_q.len() as f64)
}

/// Reciprocal rank of the first relevant result within the top `k`, else 0.
pub fn mrr_at_k(results: &[SetId], g_q: &BTreeSet<SetId>, k: usize) -> Result<f64> {
    check(g_q)?;
    Ok(top(results, k)
        .iter()
        .position(|id| g_q.contains(id))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64))
}

/// 1 if any relevant document is in the top `k`, else 0.
pub fn success_at_k(results: &[SetId], g_q: &BTreeSet<SetId>, k: usize) -> Result<f64> {
    check(g_q)?;
    Ok(if top(results, k).iter().any(|id| g_q.contains(id)) {
        1.0
    } else {
        0.0
    })
}
