//! Per-set cluster cutoff `r`, predicted by a small Gini decision tree.
//!
//! A training label is the rank of the first profile cluster that the
//! paired query's filter would visit; the tree learns it from the padded
//! top scores of the profile plus the set size.

use crate::cluster::space::TfIdfProfile;
use crate::error::{Error, Result};
use crate::types::{SetId, VectorSet};

pub const DEFAULT_R_MAX: usize = 10;
pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_MIN_LEAF: usize = 10;
pub const DEFAULT_FALLBACK_R: usize = 3;

/// A query with one known relevant document.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair<T> {
    pub query: VectorSet<T>,
    pub positive: SetId,
}

/// 1-based rank of the first profile entry whose cluster is in
/// `query_clusters`; `r_max` when none of the first `r_max` entries match.
pub fn label_cutoff(profile: &TfIdfProfile, query_clusters: &[u32], r_max: usize) -> usize {
    profile
        .clusters()
        .take(r_max)
        .position(|c| query_clusters.contains(&c))
        .map_or(r_max, |p| p + 1)
}

/// Feature vector: top-`r_max` scores (zero-padded) followed by `m`.
pub fn cutoff_features(profile: &TfIdfProfile, m: usize, r_max: usize) -> Vec<f64> {
    let mut f = profile.padded_scores(r_max);
    f.push(m as f64);
    f
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: u32,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffModel {
    nodes: Vec<TreeNode>,
    r_max: usize,
    max_depth: usize,
}

impl CutoffModel {
    pub(crate) fn from_parts(nodes: Vec<TreeNode>, r_max: usize, max_depth: usize) -> Result<Self> {
        let n = nodes.len() as u32;
        let ok = !nodes.is_empty()
            && nodes.iter().enumerate().all(|(i, node)| match *node {
                TreeNode::Leaf { label } => label >= 1 && label as usize <= r_max,
                TreeNode::Split { left, right, .. } => {
                    left < n && right < n && left > i as u32 && right > i as u32
                }
            });
        if !ok {
            return Err(Error::Malformed("invalid cutoff tree".into()));
        }
        Ok(Self {
            nodes,
            r_max,
            max_depth,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Raw leaf label for a feature vector.
    pub fn predict_features(&self, features: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { label } => return label as usize,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let x = features.get(feature as usize).copied().unwrap_or(0.0);
                    i = if x <= threshold { left } else { right } as usize;
                }
            }
        }
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(labels: &[u32], idx: &[usize], r_max: usize) -> u32 {
    let mut counts = vec![0usize; r_max + 1];
    for &i in idx {
        counts[labels[i] as usize] += 1;
    }
    // Lowest label wins ties.
    let mut best = 1;
    for l in 1..=r_max {
        if counts[l] > counts[best] {
            best = l;
        }
    }
    best as u32
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [u32],
    r_max: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> u32 {
        let slot = self.nodes.len() as u32;
        self.nodes.push(TreeNode::Leaf {
            label: majority(self.labels, &idx, self.r_max),
        });
        if depth >= self.max_depth || idx.len() < 2 * self.min_leaf.max(1) {
            return slot;
        }
        let mut parent_counts = vec![0usize; self.r_max + 1];
        for &i in &idx {
            parent_counts[self.labels[i] as usize] += 1;
        }
        let parent = gini(&parent_counts, idx.len());
        if parent == 0.0 {
            return slot;
        }

        let n_features = self.features[idx[0]].len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.clone();
        for f in 0..n_features {
            order.sort_by(|&a, &b| {
                self.features[a][f]
                    .total_cmp(&self.features[b][f])
                    .then(a.cmp(&b))
            });
            let mut left = vec![0usize; self.r_max + 1];
            let mut right = parent_counts.clone();
            for pos in 0..order.len() - 1 {
                let l = self.labels[order[pos]] as usize;
                left[l] += 1;
                right[l] -= 1;
                let (nl, nr) = (pos + 1, order.len() - pos - 1);
                let (x, next) = (
                    self.features[order[pos]][f],
                    self.features[order[pos + 1]][f],
                );
                if x == next || nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr))
                    / order.len() as f64;
                if best.is_none_or(|(b, _, _)| impurity < b - 1e-12) {
                    best = Some((impurity, f, 0.5 * (x + next)));
                }
            }
        }
        let Some((impurity, feature, threshold)) = best else {
            return slot;
        };
        if impurity >= parent - 1e-12 {
            return slot;
        }
        let (l_idx, r_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.features[i][feature] <= threshold);
        let left = self.grow(l_idx, depth + 1);
        let right = self.grow(r_idx, depth + 1);
        self.nodes[slot as usize] = TreeNode::Split {
            feature: feature as u32,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Greedy top-down tree minimizing Gini impurity over the label classes.
pub fn train_cutoff_model(
    features: &[Vec<f64>],
    labels: &[usize],
    r_max: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Result<CutoffModel> {
    if features.len() != labels.len() {
        return Err(Error::InvalidParams(
            "features and labels differ in length".into(),
        ));
    }
    if r_max == 0 {
        return Err(Error::InvalidParams("r_max must be at least 1".into()));
    }
    if labels.is_empty() || labels.len() < min_leaf {
        return Err(Error::TooFewSamples {
            needed: min_leaf.max(1),
            available: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > r_max) {
        return Err(Error::InvalidParams(format!(
            "label {bad} outside 1..={r_max}"
        )));
    }
    let width = features[0].len();
    if features.iter().any(|f| f.len() != width) {
        return Err(Error::InvalidParams("ragged feature rows".into()));
    }
    let labels: Vec<u32> = labels.iter().map(|&l| l as u32).collect();
    let mut builder = TreeBuilder {
        features,
        labels: &labels,
        r_max,
        max_depth,
        min_leaf,
        nodes: Vec::new(),
    };
    builder.grow((0..labels.len()).collect(), 0);
    Ok(CutoffModel {
        nodes: builder.nodes,
        r_max,
        max_depth,
    })
}

/// Leaf prediction clamped to `[1, min(r_max, |profile|)]`.
pub fn predict_cutoff(model: &CutoffModel, profile: &TfIdfProfile, m: usize) -> usize {
    let raw = model.predict_features(&cutoff_features(profile, m, model.r_max));
    raw.clamp(1, model.r_max.min(profile.len()).max(1))
}
