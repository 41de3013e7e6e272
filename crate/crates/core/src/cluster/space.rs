//! Two-stage clustering and TF-IDF cluster profiles.

use rand::seq::index::sample;

use crate::cluster::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::metric::{build_codebook, encode, CodeSet, Codebook};
use crate::rng::SeededRng;
use crate::scalar::{norm, Scalar};
use crate::types::{Corpus, SimilarityKind, Vector, VectorSet};

/// The coarse cluster space `C_index` and the fine-to-coarse mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpace<T> {
    kind: SimilarityKind,
    index_centroids: Vec<Vector<T>>,
    quant_to_index: Vec<u32>,
    doc_freq: Vec<u64>,
    n_sets: u64,
}

impl<T: Scalar> ClusterSpace<T> {
    pub(crate) fn from_parts(
        kind: SimilarityKind,
        index_centroids: Vec<Vector<T>>,
        quant_to_index: Vec<u32>,
        doc_freq: Vec<u64>,
        n_sets: u64,
    ) -> Result<Self> {
        let k2 = index_centroids.len();
        if k2 == 0
            || doc_freq.len() != k2
            || quant_to_index.iter().any(|&j| j as usize >= k2)
            || doc_freq.iter().any(|&df| df > n_sets)
        {
            return Err(Error::Malformed("inconsistent cluster space".into()));
        }
        Ok(Self {
            kind,
            index_centroids,
            quant_to_index,
            doc_freq,
            n_sets,
        })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Number of coarse clusters `k2`.
    pub fn len(&self) -> usize {
        self.index_centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_centroids.is_empty()
    }

    pub fn index_centroids(&self) -> &[Vector<T>] {
        &self.index_centroids
    }

    pub fn quant_to_index(&self) -> &[u32] {
        &self.quant_to_index
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    /// Number of sets the document frequencies were counted over.
    pub fn n_sets(&self) -> u64 {
        self.n_sets
    }

    /// Coarse cluster of every vector, via its fine code.
    pub fn coarse_of(&self, code: u32) -> u32 {
        self.quant_to_index[code as usize]
    }

    /// Term frequencies `(cluster, TF)` for a coded set, ascending by cluster.
    pub fn term_frequencies(&self, codes: &CodeSet) -> Vec<(u32, u32)> {
        let mut tf: Vec<(u32, u32)> = Vec::new();
        let mut coarse: Vec<(u32, u32)> = codes
            .histogram()
            .iter()
            .map(|&(c, n)| (self.coarse_of(c), n))
            .collect();
        coarse.sort_unstable();
        for (j, n) in coarse {
            match tf.last_mut() {
                Some((last, total)) if *last == j => *total += n,
                _ => tf.push((j, n)),
            }
        }
        tf
    }

    /// Counts one more set towards `N` and the document frequencies.
    pub(crate) fn observe(&mut self, codes: &CodeSet) {
        self.n_sets += 1;
        for (j, _) in self.term_frequencies(codes) {
            self.doc_freq[j as usize] += 1;
        }
    }
}

fn unit_or_keep<T: Scalar>(v: Vector<T>, fallback: &[T]) -> Vector<T> {
    let n = norm(&v);
    if n > 1e-12 && n.is_finite() {
        v.iter().map(|&x| T::narrow(x.widen() / n)).collect()
    } else {
        fallback.to_vec()
    }
}

fn spherical<T: Scalar>(
    centroids: Vec<Vector<T>>,
    points: &[&[T]],
    kind: SimilarityKind,
) -> Vec<Vector<T>> {
    match kind {
        SimilarityKind::L2 => centroids,
        SimilarityKind::Cosine => centroids
            .into_iter()
            .map(|c| {
                let fallback = points
                    .iter()
                    .min_by(|a, b| {
                        crate::scalar::squared_l2(a, &c)
                            .total_cmp(&crate::scalar::squared_l2(b, &c))
                    })
                    .expect("non-empty points");
                unit_or_keep(c, fallback)
            })
            .collect(),
    }
}

/// Fine k-means over a vector sample (`C_quant`), coarse k-means over the
/// fine centroids (`C_index`), the nearest-coarse mapping of every fine
/// centroid and document frequencies over the whole corpus. In cosine mode
/// all centroids are projected back to the unit sphere.
pub fn two_stage_cluster<T: Scalar>(
    corpus: &Corpus<T>,
    k1: usize,
    k2: usize,
    sample_frac: f64,
    iters: usize,
    kind: SimilarityKind,
    rng: &mut SeededRng,
) -> Result<(Codebook<T>, ClusterSpace<T>)> {
    if !(sample_frac > 0.0 && sample_frac <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "sample_frac {sample_frac} not in (0, 1]"
        )));
    }
    if k2 == 0 || k1 < k2 {
        return Err(Error::InvalidParams(format!(
            "need k1 >= k2 >= 1, got k1={k1}, k2={k2}"
        )));
    }
    let all: Vec<&[T]> = corpus.sets().iter().flat_map(VectorSet::vectors).collect();
    let sample_points: Vec<&[T]> = if sample_frac >= 1.0 {
        all
    } else {
        let n = ((all.len() as f64) * sample_frac).round().max(1.0) as usize;
        let mut picked = sample(rng, all.len(), n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| all[i]).collect()
    };
    if sample_points.len() < k1 {
        return Err(Error::TooFewPoints {
            needed: k1,
            available: sample_points.len(),
        });
    }

    let quant = kmeans(&sample_points, k1, iters, rng)?;
    let quant = spherical(quant, &sample_points, kind);
    let codebook = build_codebook(quant, kind)?;

    let fine: Vec<&[T]> = codebook.centroids().iter().map(Vec::as_slice).collect();
    let coarse = kmeans(&fine, k2, iters, rng)?;
    let coarse = spherical(coarse, &fine, kind);
    let quant_to_index = fine
        .iter()
        .map(|c| {
            let mut best = (0u32, f64::INFINITY);
            for (j, cc) in coarse.iter().enumerate() {
                let d = kind.distance(c, cc);
                if d < best.1 {
                    best = (j as u32, d);
                }
            }
            best.0
        })
        .collect();

    let mut space = ClusterSpace {
        kind,
        index_centroids: coarse,
        quant_to_index,
        doc_freq: vec![0; k2],
        n_sets: 0,
    };
    for set in corpus.sets() {
        space.observe(&encode(set, &codebook)?);
    }
    Ok((codebook, space))
}

/// Clusters of a set ranked by TF-IDF score: descending score, ties by
/// ascending cluster index. Only clusters with `TF > 0` appear.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TfIdfProfile {
    entries: Vec<(u32, f64)>,
}

impl TfIdfProfile {
    /// Sorts arbitrary `(cluster, score)` entries under the profile order.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clusters(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(c, _)| c)
    }

    /// The first `r_max` scores, zero-padded to length `r_max`.
    pub fn padded_scores(&self, r_max: usize) -> Vec<f64> {
        let mut s: Vec<f64> = self.entries.iter().take(r_max).map(|&(_, s)| s).collect();
        s.resize(r_max, 0.0);
        s
    }
}

/// `IDF(j) = ln(N / (1 + df_j))`, floored at zero so that clusters shared by
/// (nearly) every set score zero instead of negative.
pub fn idf(n_corpus: u64, doc_freq: u64) -> f64 {
    (n_corpus as f64 / (1.0 + doc_freq as f64)).ln().max(0.0)
}

pub fn profile_from_codes<T: Scalar>(
    codes: &CodeSet,
    space: &ClusterSpace<T>,
    n_corpus: u64,
) -> Result<TfIdfProfile> {
    if codes.is_empty() {
        return Err(Error::EmptySet(codes.set_id()));
    }
    Ok(TfIdfProfile::from_entries(
        space
            .term_frequencies(codes)
            .into_iter()
            .map(|(j, tf)| (j, tf as f64 * idf(n_corpus, space.doc_freq[j as usize])))
            .collect(),
    ))
}

/// Encodes `set` and scores each coarse cluster it touches by `TF * IDF`.
pub fn tfidf_profile<T: Scalar>(
    set: &VectorSet<T>,
    codebook: &Codebook<T>,
    space: &ClusterSpace<T>,
    n_corpus: u64,
) -> Result<TfIdfProfile> {
    profile_from_codes(&encode(set, codebook)?, space, n_corpus)
}

/// `C_top`: the first `min(r, |profile|)` clusters of the profile, returned
/// in ascending cluster order.
pub fn prune_clusters(profile: &TfIdfProfile, r: usize) -> Result<Vec<u32>> {
    if r == 0 {
        return Err(Error::InvalidParams("r must be at least 1".into()));
    }
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let mut top: Vec<u32> = profile.clusters().take(r).collect();
    top.sort_unstable();
    Ok(top)
}
