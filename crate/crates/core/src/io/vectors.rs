//! The `GEMV` vector-set file.
//!
//! ```text
//! header   magic "GEMV" | version u32 | N u64 | d u32 | flags u32
//! record   id u64 | m u32 | m*d f32
//! ```
//!
//! All integers and floats are little-endian. The file length must match
//! the header and record sizes exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::bytes::{Reader, Writer};
use crate::scalar::Scalar;
use crate::types::{Corpus, VectorSet};

pub const VECTORS_MAGIC: [u8; 4] = *b"GEMV";
pub const VECTORS_VERSION: u32 = 1;

pub fn encode_vector_sets<T: Scalar>(sets: &[VectorSet<T>]) -> Result<Vec<u8>> {
    let dim = sets.first().map_or(0, VectorSet::dim);
    let mut w = Writer::default();
    w.bytes(&VECTORS_MAGIC);
    w.u32(VECTORS_VERSION);
    w.usize(sets.len());
    w.u32(u32::try_from(dim).map_err(|_| Error::InvalidParams("dimension exceeds u32".into()))?);
    w.u32(0);
    for set in sets {
        set.check_dim(dim)?;
        w.u64(set.id());
        w.u32(u32::try_from(set.len()).map_err(|_| Error::InvalidParams("set too large".into()))?);
        for &x in set.as_flat() {
            w.bytes(&(x.widen() as f32).to_le_bytes());
        }
    }
    Ok(w.buf)
}

pub fn decode_vector_sets<T: Scalar>(bytes: &[u8]) -> Result<Vec<VectorSet<T>>> {
    let mut r = Reader::new(bytes, "vector file");
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if magic != VECTORS_MAGIC {
        return Err(Error::BadMagic {
            expected: VECTORS_MAGIC,
            found: magic,
        });
    }
    let version = r.u32()?;
    if version != VECTORS_VERSION {
        return Err(Error::BadVersion(version));
    }
    let n = r.len_value()?;
    let dim = r.u32()? as usize;
    let flags = r.u32()?;
    if flags != 0 {
        return Err(Error::Malformed(format!("unsupported flags {flags:#x}")));
    }
    if n > 0 && dim == 0 {
        return Err(Error::Malformed("zero dimension".into()));
    }
    let mut sets = Vec::with_capacity(n.min(r.remaining() / 12 + 1));
    for _ in 0..n {
        let id = r.u64()?;
        let m = r.u32()? as usize;
        let raw = r.take(
            m.checked_mul(dim)
                .and_then(|x| x.checked_mul(4))
                .ok_or_else(|| Error::Malformed(format!("record {id} size overflows")))?,
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::narrow(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
            .collect();
        sets.push(VectorSet::from_flat(id, dim, data)?);
    }
    r.finish()?;
    Ok(sets)
}

pub fn save_vector_sets<T: Scalar>(sets: &[VectorSet<T>], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_vector_sets(sets)?)?;
    Ok(())
}

pub fn load_vector_sets<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<VectorSet<T>>> {
    decode_vector_sets(&fs::read(path)?)
}

pub fn save_corpus<T: Scalar>(corpus: &Corpus<T>, path: impl AsRef<Path>) -> Result<()> {
    save_vector_sets(corpus.sets(), path)
}

/// Loads a corpus; records may appear in any order but ids must be dense.
pub fn load_corpus<T: Scalar>(path: impl AsRef<Path>) -> Result<Corpus<T>> {
    Corpus::from_unordered(load_vector_sets(path)?)
}
