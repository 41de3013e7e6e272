//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::{squared_l2, Scalar};
use crate::types::Vector;

pub const DEFAULT_KMEANS_ITERS: usize = 25;

#[derive(Debug, Clone)]
pub struct KMeansFit<T> {
    pub centroids: Vec<Vector<T>>,
    pub assignments: Vec<u32>,
    /// Sum of squared distances after every assignment step; the first
    /// entry is the objective right after seeding.
    pub objective: Vec<f64>,
}

/// Returns `k` centroids of `points`.
pub fn kmeans<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    iters: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Vector<T>>> {
    Ok(kmeans_fit(points, k, iters, rng)?.centroids)
}

fn nearest<T: Scalar>(p: &[T], centroids: &[Vec<f64>]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d: f64 = p
            .iter()
            .zip(centroid)
            .map(|(&x, &y)| {
                let t = x.widen() - y;
                t * t
            })
            .sum();
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

pub fn kmeans_fit<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    iters: usize,
    rng: &mut SeededRng,
) -> Result<KMeansFit<T>> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            available: points.len(),
        });
    }
    let dim = points[0].as_ref().len();
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: p.as_ref().len(),
        });
    }

    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignments = vec![0u32; points.len()];
    let mut costs = vec![0.0f64; points.len()];
    let mut objective = Vec::with_capacity(iters + 1);

    let assign =
        |centroids: &[Vec<f64>], assignments: &mut [u32], costs: &mut [f64]| -> (f64, bool) {
            let mut changed = false;
            let mut total = 0.0;
            for (i, p) in points.iter().enumerate() {
                let (c, d) = nearest(p.as_ref(), centroids);
                changed |= assignments[i] != c;
                assignments[i] = c;
                costs[i] = d;
                total += d;
            }
            (total, changed)
        };

    objective.push(assign(&centroids, &mut assignments, &mut costs).0);
    for _ in 0..iters {
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c as usize] += 1;
            for (s, &x) in sums[c as usize].iter_mut().zip(p.as_ref()) {
                *s += x.widen();
            }
        }
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                let n = counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s / n).collect();
            } else {
                // Empty cluster: reseed on the point currently farthest from
                // its centroid.
                let far = (0..points.len())
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(b.cmp(&a)))
                    .expect("at least k points");
                taken.push(far);
                costs[far] = 0.0;
                centroids[c] = points[far].as_ref().iter().map(|x| x.widen()).collect();
            }
        }
        let (total, changed) = assign(&centroids, &mut assignments, &mut costs);
        objective.push(total);
        if !changed && taken.is_empty() {
            break;
        }
    }

    Ok(KMeansFit {
        centroids: centroids
            .into_iter()
            .map(|c| c.into_iter().map(T::narrow).collect())
            .collect(),
        assignments,
        objective,
    })
}

fn seed_plus_plus<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    rng: &mut SeededRng,
) -> Vec<Vec<f64>> {
    let widen = |p: &P| p.as_ref().iter().map(|x| x.widen()).collect::<Vec<f64>>();
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![widen(&points[first])];
    let mut best: Vec<f64> = points
        .iter()
        .map(|p| squared_l2(p.as_ref(), points[first].as_ref()))
        .collect();

    while centroids.len() < k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in best.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // All remaining points coincide with chosen centroids.
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        let c = widen(&points[pick]);
        for (b, p) in best.iter_mut().zip(points) {
            let d: f64 = p
                .as_ref()
                .iter()
                .zip(&c)
                .map(|(&x, &y)| (x.widen() - y).powi(2))
                .sum();
            if d < *b {
                *b = d;
            }
        }
        centroids.push(c);
    }
    centroids
}
