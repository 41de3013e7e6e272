//! Graph index for multi-vector retrieval under Chamfer similarity.
//!
//! Documents and queries are sets of vectors. The index quantizes every
//! vector against a fine codebook, groups sets into coarse clusters through
//! TF-IDF profiles, and links sets inside each cluster with a bounded-degree
//! proximity graph whose vertices may belong to several clusters. Search is
//! a cluster-filtered beam search on quantized Chamfer distance followed by
//! an exact rerank.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod cluster;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod metric;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use graph::{BuildParams, GemGraph, GemIndex};
pub use scalar::Scalar;
pub use search::{SearchParams, SearchResult};
pub use types::{Corpus, SetId, SimilarityKind, VectorSet};

pub type VectorSet32 = VectorSet<f32>;
pub type VectorSet64 = VectorSet<f64>;
pub type Corpus32 = Corpus<f32>;
pub type Corpus64 = Corpus<f64>;
pub type GemIndex32 = GemIndex<f32>;
pub type GemIndex64 = GemIndex<f64>;
