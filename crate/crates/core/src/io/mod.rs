//! On-disk formats: vector-set files, index files and id-pair text files.

mod bytes;
mod index;
mod text;
mod vectors;

pub use index::{
    decode_index, encode_index, index_scalar_width, load_index, save_index, INDEX_MAGIC,
    INDEX_VERSION,
};
pub use text::{format_id_pairs, load_pairs, load_qrels, parse_id_pairs, save_pairs, save_qrels};
pub use vectors::{
    decode_vector_sets, encode_vector_sets, load_corpus, load_vector_sets, save_corpus,
    save_vector_sets, VECTORS_MAGIC, VECTORS_VERSION,
};
