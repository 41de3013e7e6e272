use crate::error::Result;
use crate::scalar::Scalar;
use crate::types::{SimilarityKind, VectorSet};

/// Late-interaction score: for every vector of `a`, its best similarity
/// against `b`, summed over `a`.
pub fn chamfer_similarity<T: Scalar>(
    a: &VectorSet<T>,
    b: &VectorSet<T>,
    kind: SimilarityKind,
) -> Result<f64> {
    b.check_dim(a.dim())?;
    Ok(a.vectors()
        .map(|x| {
            b.vectors()
                .map(|y| kind.similarity(x, y))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum())
}

/// Mean over `a` of the distance to the nearest vector of `b`. This is the
/// normalized form that is bounded above by the uniform-mass EMD.
pub fn chamfer_distance<T: Scalar>(
    a: &VectorSet<T>,
    b: &VectorSet<T>,
    kind: SimilarityKind,
) -> Result<f64> {
    b.check_dim(a.dim())?;
    let total: f64 = a
        .vectors()
        .map(|x| {
            b.vectors()
                .map(|y| kind.distance(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / a.len() as f64)
}
