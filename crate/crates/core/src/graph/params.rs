//! Index construction parameters and their size heuristics.

use crate::cluster::{
    DEFAULT_FALLBACK_R, DEFAULT_KMEANS_ITERS, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF, DEFAULT_R_MAX,
};
use crate::error::{Error, Result};
use crate::types::SimilarityKind;

pub const DEFAULT_DEGREE_CAP: usize = 24;
pub const DEFAULT_EF_CONSTRUCTION: usize = 80;
pub const DEFAULT_SHORTCUT_FRAC: f64 = 0.2;
pub const DEFAULT_F_PRIME: usize = 10;
pub const DEFAULT_SHORTCUT_CAP: usize = 4;
pub const DEFAULT_FILTER_T: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    pub kind: SimilarityKind,
    /// Fine centroids `|C_quant|`; `None` applies [`default_k1`].
    pub k1: Option<usize>,
    /// Coarse clusters `|C_index|`; `None` applies [`default_k2`].
    pub k2: Option<usize>,
    /// Construction fan-out; `None` means `M`.
    pub f: Option<usize>,
    /// Degree cap `M` on regular edges.
    pub m: usize,
    pub ef_construction: usize,
    pub r_max: usize,
    /// Cutoff used when no cutoff model can be trained.
    pub fallback_r: usize,
    /// Fraction of training pairs used for shortcut injection.
    pub shortcut_frac: f64,
    /// Neighbors retrieved per training query during shortcut injection.
    pub f_prime: usize,
    /// Maximum shortcut edges per vertex.
    pub shortcut_cap: usize,
    pub kmeans_iters: usize,
    pub sample_frac: f64,
    /// When false every profiled cluster is kept (`C_top = C(P)`).
    pub tfidf_pruning: bool,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    /// Top-t centroids per query token used for cutoff labels and
    /// shortcut searches.
    pub filter_t: usize,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            kind: SimilarityKind::Cosine,
            k1: None,
            k2: None,
            f: None,
            m: DEFAULT_DEGREE_CAP,
            ef_construction: DEFAULT_EF_CONSTRUCTION,
            r_max: DEFAULT_R_MAX,
            fallback_r: DEFAULT_FALLBACK_R,
            shortcut_frac: DEFAULT_SHORTCUT_FRAC,
            f_prime: DEFAULT_F_PRIME,
            shortcut_cap: DEFAULT_SHORTCUT_CAP,
            kmeans_iters: DEFAULT_KMEANS_ITERS,
            sample_frac: 1.0,
            tfidf_pruning: true,
            tree_max_depth: DEFAULT_MAX_DEPTH,
            tree_min_leaf: DEFAULT_MIN_LEAF,
            filter_t: DEFAULT_FILTER_T,
            seed: 0,
        }
    }
}

/// `2^floor(log2(16 * sqrt(total)))`, clamped to `[16, total]`.
pub fn default_k1(total_vectors: usize) -> usize {
    if total_vectors == 0 {
        return 0;
    }
    let target = 16.0 * (total_vectors as f64).sqrt();
    let pow = 1usize << (target.log2().floor() as u32);
    pow.clamp(16.min(total_vectors), total_vectors)
}

/// `max(2, N / 1000)`, clamped to `N`.
pub fn default_k2(n_sets: usize) -> usize {
    (n_sets / 1000).max(2).min(n_sets)
}

impl BuildParams {
    pub fn k1(&self) -> usize {
        self.k1.expect("resolved parameters")
    }

    pub fn k2(&self) -> usize {
        self.k2.expect("resolved parameters")
    }

    pub fn f(&self) -> usize {
        self.f.unwrap_or(self.m)
    }

    /// Fills the heuristic defaults for a corpus of `n_sets` sets holding
    /// `total_vectors` vectors and validates the result.
    pub fn resolve(&self, n_sets: usize, total_vectors: usize) -> Result<Self> {
        let mut p = self.clone();
        let k1 = p.k1.unwrap_or_else(|| default_k1(total_vectors));
        let k2 = p.k2.unwrap_or_else(|| default_k2(n_sets).min(k1.max(1)));
        p.k1 = Some(k1);
        p.k2 = Some(k2);
        p.f = Some(p.f());
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let f = self.f();
        if !(1 <= f && f <= self.m && self.m <= self.ef_construction) {
            return bad(format!(
                "need 1 <= f <= M <= ef_construction, got f={f}, M={}, ef_construction={}",
                self.m, self.ef_construction
            ));
        }
        if !(0.0..=1.0).contains(&self.shortcut_frac) {
            return bad(format!(
                "shortcut_frac {} not in [0, 1]",
                self.shortcut_frac
            ));
        }
        if !(self.sample_frac > 0.0 && self.sample_frac <= 1.0) {
            return bad(format!("sample_frac {} not in (0, 1]", self.sample_frac));
        }
        if self.r_max == 0 || self.fallback_r == 0 || self.f_prime == 0 || self.filter_t == 0 {
            return bad("r_max, fallback_r, f_prime and filter_t must be at least 1".into());
        }
        if let (Some(k1), Some(k2)) = (self.k1, self.k2) {
            if k2 == 0 || k1 < k2 {
                return bad(format!("need k1 >= k2 >= 1, got k1={k1}, k2={k2}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_rounds_down_to_a_power_of_two() {
        // 16 * sqrt(597e6) ~ 390_929 lies between 2^18 and 2^19.
        assert_eq!(default_k1(597_000_000), 262_144);
        // 16 * sqrt(2200) ~ 750.5.
        assert_eq!(default_k1(2200), 512);
        assert_eq!(default_k1(10), 10);
        assert_eq!(default_k1(1), 1);
    }

    #[test]
    fn k2_targets_a_thousand_sets_per_cluster() {
        assert_eq!(default_k2(400), 2);
        assert_eq!(default_k2(40_000), 40);
        assert_eq!(default_k2(1), 1);
    }

    #[test]
    fn resolve_and_validate() {
        let p = BuildParams::default().resolve(400, 2200).unwrap();
        assert_eq!((p.k1(), p.k2(), p.f()), (512, 2, 24));
        let bad = BuildParams {
            f: Some(30),
            ..BuildParams::default()
        };
        assert!(bad.resolve(400, 2200).is_err());
        let bad = BuildParams {
            shortcut_frac: 1.5,
            ..BuildParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
