//! Vector sets, corpora and the similarity kinds shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, squared_l2, Scalar};

/// Document or query identifier. Corpus ids are the dense range `0..N`.
pub type SetId = u64;

/// An owned d-dimensional vector.
pub type Vector<T> = Vec<T>;

/// Per-vector similarity and its distance counterpart `d_X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    /// Inner product on unit vectors; `d_X = 1 - <x, y>`.
    #[default]
    Cosine,
    /// Negated Euclidean distance; `d_X = ||x - y||`.
    L2,
}

impl SimilarityKind {
    /// `d_X(a, b)`. Cosine distances are clamped at zero so that rounding on
    /// unit vectors never produces a negative cost.
    #[inline]
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> f64 {
        match self {
            SimilarityKind::Cosine => (1.0 - dot(a, b)).max(0.0),
            SimilarityKind::L2 => squared_l2(a, b).sqrt(),
        }
    }

    /// `Sim(a, b)`; larger is more similar.
    #[inline]
    pub fn similarity<T: Scalar>(self, a: &[T], b: &[T]) -> f64 {
        match self {
            SimilarityKind::Cosine => dot(a, b),
            SimilarityKind::L2 => -squared_l2(a, b).sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityKind::Cosine => "cosine",
            SimilarityKind::L2 => "l2",
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            SimilarityKind::Cosine => 0,
            SimilarityKind::L2 => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(SimilarityKind::Cosine),
            1 => Ok(SimilarityKind::L2),
            other => Err(Error::Malformed(format!("unknown similarity code {other}"))),
        }
    }
}

impl std::str::FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" | "ip" => Ok(SimilarityKind::Cosine),
            "l2" | "euclidean" => Ok(SimilarityKind::L2),
            other => Err(Error::InvalidParams(format!("unknown metric {other:?}"))),
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One document or query: `m >= 1` vectors of a common dimension, stored
/// row-major in a single buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet<T> {
    id: SetId,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> VectorSet<T> {
    /// Builds a set from row vectors.
    pub fn new(id: SetId, vectors: Vec<Vector<T>>) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or(Error::EmptySet(id))?;
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            data.extend_from_slice(v);
        }
        Self::from_flat(id, dim, data)
    }

    /// Builds a set from a row-major buffer of `m * dim` components.
    pub fn from_flat(id: SetId, dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptySet(id));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { set: id });
        }
        Ok(Self { id, dim, data })
    }

    pub fn id(&self) -> SetId {
        self.id
    }

    pub fn with_id(mut self, id: SetId) -> Self {
        self.id = id;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors `m`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Converts the storage scalar type.
    pub fn cast<U: Scalar>(&self) -> VectorSet<U> {
        VectorSet {
            id: self.id,
            dim: self.dim,
            data: self.data.iter().map(|x| U::narrow(x.widen())).collect(),
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected: dim,
                found: self.dim,
            })
        }
    }

    /// Scales every vector to unit L2 norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut data = Vec::with_capacity(self.data.len());
        for v in self.vectors() {
            let n = norm(v);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::ZeroVector { set: self.id });
            }
            data.extend(v.iter().map(|&x| T::narrow(x.widen() / n)));
        }
        Ok(Self {
            id: self.id,
            dim: self.dim,
            data,
        })
    }

    /// Applies the ingest transform for `kind`: unit-normalization for
    /// cosine, identity for l2.
    pub fn prepared(&self, kind: SimilarityKind) -> Result<Self> {
        match kind {
            SimilarityKind::Cosine => self.normalized(),
            SimilarityKind::L2 => Ok(self.clone()),
        }
    }
}

/// A database of vector sets with dense ids `0..N` and a shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus<T> {
    dim: usize,
    sets: Vec<VectorSet<T>>,
}

impl<T: Scalar> Corpus<T> {
    pub fn new(sets: Vec<VectorSet<T>>) -> Result<Self> {
        let dim = sets.first().map(VectorSet::dim).ok_or(Error::EmptyCorpus)?;
        for (position, set) in sets.iter().enumerate() {
            if set.id() != position as SetId {
                return Err(Error::NonDenseIds {
                    position,
                    id: set.id(),
                });
            }
            set.check_dim(dim)?;
        }
        Ok(Self { dim, sets })
    }

    /// Renumbers the sets to `0..N` in the given order.
    pub fn from_unordered(sets: Vec<VectorSet<T>>) -> Result<Self> {
        Self::new(
            sets.into_iter()
                .enumerate()
                .map(|(i, s)| s.with_id(i as SetId))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[VectorSet<T>] {
        &self.sets
    }

    pub fn get(&self, id: SetId) -> Option<&VectorSet<T>> {
        self.sets.get(usize::try_from(id).ok()?)
    }

    pub fn total_vectors(&self) -> usize {
        self.sets.iter().map(VectorSet::len).sum()
    }

    /// Appends a set whose id must equal the current length.
    pub(crate) fn push(&mut self, set: VectorSet<T>) -> Result<()> {
        let next = self.sets.len() as SetId;
        if set.id() < next {
            return Err(Error::DuplicateId(set.id()));
        }
        if set.id() > next {
            return Err(Error::NonDenseIds {
                position: self.sets.len(),
                id: set.id(),
            });
        }
        set.check_dim(self.dim)?;
        self.sets.push(set);
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Corpus<U> {
        Corpus {
            dim: self.dim,
            sets: self.sets.iter().map(VectorSet::cast).collect(),
        }
    }

    pub fn into_sets(self) -> Vec<VectorSet<T>> {
        self.sets
    }
}

/// Prepares a corpus for `kind`: cosine mode scales every vector to unit
/// norm, l2 mode leaves it unchanged.
pub fn normalize_corpus<T: Scalar>(corpus: &Corpus<T>, kind: SimilarityKind) -> Result<Corpus<T>> {
    match kind {
        SimilarityKind::L2 => Ok(corpus.clone()),
        SimilarityKind::Cosine => Ok(Corpus {
            dim: corpus.dim,
            sets: corpus
                .sets
                .iter()
                .map(VectorSet::normalized)
                .collect::<Result<_>>()?,
        }),
    }
}
