//! Exact and quantized set-to-set measures.

mod chamfer;
mod codebook;
mod transport;

pub use chamfer::{chamfer_distance, chamfer_similarity};
pub use codebook::{build_codebook, encode, qch, qemd, CodeSet, Codebook};
pub use transport::{emd, TransportPlan};

pub(crate) use codebook::{qch_unchecked, qemd_unchecked};
