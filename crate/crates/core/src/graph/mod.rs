//! GEM's dual graph: per-cluster proximity graphs joined through bridge
//! vertices, plus shortcut edges learned from training pairs.

mod build;
mod index;
mod params;
mod structure;

pub use build::BridgeReport;
pub use index::{BuildReport, GemIndex, InsertReport};
pub use params::{
    default_k1, default_k2, BuildParams, DEFAULT_DEGREE_CAP, DEFAULT_EF_CONSTRUCTION,
    DEFAULT_FILTER_T, DEFAULT_F_PRIME, DEFAULT_SHORTCUT_CAP, DEFAULT_SHORTCUT_FRAC,
};
pub use structure::{Edge, GemGraph};

pub(crate) use build::{best_first, shares_neighbor, Scored, Visited};
