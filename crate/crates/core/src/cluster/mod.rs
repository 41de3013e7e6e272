//! Set-level clustering: two-stage k-means, TF-IDF profiles, cluster
//! pruning and the adaptive cutoff model.

mod cutoff;
mod kmeans;
mod space;

pub use cutoff::{
    cutoff_features, label_cutoff, predict_cutoff, train_cutoff_model, CutoffModel, TrainingPair,
    TreeNode, DEFAULT_FALLBACK_R, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF, DEFAULT_R_MAX,
};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit, DEFAULT_KMEANS_ITERS};
pub use space::{
    idf, profile_from_codes, prune_clusters, tfidf_profile, two_stage_cluster, ClusterSpace,
    TfIdfProfile,
};
