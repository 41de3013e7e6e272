//! Fine centroid vocabulary and the quantized set measures built on it.

use crate::error::{Error, Result};
use crate::metric::transport::{lcm, solve};
use crate::scalar::Scalar;
use crate::types::{SetId, SimilarityKind, Vector, VectorSet};

/// The fine centroids `C_quant` and their precomputed `k1 x k1` distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    kind: SimilarityKind,
    dim: usize,
    centroids: Vec<Vector<T>>,
    pair_dist: Vec<f64>,
}

/// Builds a codebook, filling the pairwise table with `d_X`.
pub fn build_codebook<T: Scalar>(
    centroids: Vec<Vector<T>>,
    kind: SimilarityKind,
) -> Result<Codebook<T>> {
    let dim = centroids
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidParams("codebook needs at least one centroid".into()))?;
    if let Some(bad) = centroids.iter().find(|c| c.len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let k1 = centroids.len();
    let mut pair_dist = vec![0.0; k1 * k1];
    for i in 0..k1 {
        for j in (i + 1)..k1 {
            let d = kind.distance(&centroids[i], &centroids[j]);
            pair_dist[i * k1 + j] = d;
            pair_dist[j * k1 + i] = d;
        }
    }
    Ok(Codebook {
        kind,
        dim,
        centroids,
        pair_dist,
    })
}

impl<T: Scalar> Codebook<T> {
    pub(crate) fn from_parts(
        kind: SimilarityKind,
        centroids: Vec<Vector<T>>,
        pair_dist: Vec<f64>,
    ) -> Result<Self> {
        let k1 = centroids.len();
        let dim = centroids.first().map(Vec::len).unwrap_or(0);
        if k1 == 0
            || dim == 0
            || pair_dist.len() != k1 * k1
            || centroids.iter().any(|c| c.len() != dim)
        {
            return Err(Error::Malformed("inconsistent codebook section".into()));
        }
        Ok(Self {
            kind,
            dim,
            centroids,
            pair_dist,
        })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of centroids `k1`.
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[Vector<T>] {
        &self.centroids
    }

    pub fn pair_table(&self) -> &[f64] {
        &self.pair_dist
    }

    #[inline]
    pub fn pair_dist(&self, i: u32, j: u32) -> f64 {
        self.pair_dist[i as usize * self.centroids.len() + j as usize]
    }

    /// Nearest centroid of `v`; ties go to the lowest index.
    pub fn nearest(&self, v: &[T]) -> u32 {
        let mut best = 0u32;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in self.centroids.iter().enumerate() {
            let d = self.kind.distance(v, centroid);
            if d < best_d {
                best_d = d;
                best = c as u32;
            }
        }
        best
    }

    fn check(&self, codes: &CodeSet) -> Result<()> {
        let k1 = self.len();
        match codes.histogram.iter().find(|&&(c, _)| c as usize >= k1) {
            Some(&(code, _)) => Err(Error::CodeOutOfRange { code, k1 }),
            None => Ok(()),
        }
    }
}

/// A set quantized against a codebook: one centroid index per vector, plus
/// the histogram of those indices sorted by centroid index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    set_id: SetId,
    codes: Vec<u32>,
    histogram: Vec<(u32, u32)>,
}

impl CodeSet {
    pub fn new(set_id: SetId, codes: Vec<u32>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptySet(set_id));
        }
        let mut sorted = codes.clone();
        sorted.sort_unstable();
        let mut histogram: Vec<(u32, u32)> = Vec::new();
        for c in sorted {
            match histogram.last_mut() {
                Some((last, n)) if *last == c => *n += 1,
                _ => histogram.push((c, 1)),
            }
        }
        Ok(Self {
            set_id,
            codes,
            histogram,
        })
    }

    pub fn set_id(&self) -> SetId {
        self.set_id
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// `(centroid, count)` pairs, ascending by centroid.
    pub fn histogram(&self) -> &[(u32, u32)] {
        &self.histogram
    }

    /// `m`.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn contains(&self, code: u32) -> bool {
        self.histogram
            .binary_search_by_key(&code, |&(c, _)| c)
            .is_ok()
    }
}

/// Maps every vector of `set` to its nearest centroid.
pub fn encode<T: Scalar>(set: &VectorSet<T>, codebook: &Codebook<T>) -> Result<CodeSet> {
    set.check_dim(codebook.dim())?;
    CodeSet::new(
        set.id(),
        set.vectors().map(|v| codebook.nearest(v)).collect(),
    )
}

/// Quantized EMD: optimal transport between the two code histograms with
/// masses `count / m` and ground costs from the codebook table.
pub fn qemd<T: Scalar>(a: &CodeSet, b: &CodeSet, codebook: &Codebook<T>) -> Result<f64> {
    codebook.check(a)?;
    codebook.check(b)?;
    Ok(qemd_unchecked(a, b, codebook))
}

pub(crate) fn qemd_unchecked<T: Scalar>(a: &CodeSet, b: &CodeSet, codebook: &Codebook<T>) -> f64 {
    let (m1, m2) = (a.len() as u64, b.len() as u64);
    let scale = lcm(m1, m2);
    let (ha, hb) = (&a.histogram, &b.histogram);
    if ha.len() == 1 || hb.len() == 1 {
        // One side is a single atom: every unit of mass travels to or from it.
        let mut total = 0.0;
        for &(ca, na) in ha {
            for &(cb, nb) in hb {
                let mass = if ha.len() == 1 {
                    nb as f64 / m2 as f64
                } else {
                    na as f64 / m1 as f64
                };
                total += mass * codebook.pair_dist(ca, cb);
            }
        }
        return total;
    }
    let supply: Vec<u64> = ha.iter().map(|&(_, n)| n as u64 * (scale / m1)).collect();
    let demand: Vec<u64> = hb.iter().map(|&(_, n)| n as u64 * (scale / m2)).collect();
    let mut cost = Vec::with_capacity(ha.len() * hb.len());
    for &(ca, _) in ha {
        for &(cb, _) in hb {
            cost.push(codebook.pair_dist(ca, cb));
        }
    }
    solve(&supply, &demand, &cost)
        .expect("codebook distances are finite and non-negative")
        .scaled_cost
        / scale as f64
}

/// Quantized Chamfer distance in sum form: for every code of `q`, the
/// table distance to the closest code of `p`, summed over `q`.
pub fn qch<T: Scalar>(q: &CodeSet, p: &CodeSet, codebook: &Codebook<T>) -> Result<f64> {
    codebook.check(q)?;
    codebook.check(p)?;
    Ok(qch_unchecked(q, p, codebook))
}

#[inline]
pub(crate) fn qch_unchecked<T: Scalar>(q: &CodeSet, p: &CodeSet, codebook: &Codebook<T>) -> f64 {
    q.histogram
        .iter()
        .map(|&(cq, n)| {
            let best = p
                .histogram
                .iter()
                .map(|&(cp, _)| codebook.pair_dist(cq, cp))
                .fold(f64::INFINITY, f64::min);
            n as f64 * best
        })
        .sum()
}
