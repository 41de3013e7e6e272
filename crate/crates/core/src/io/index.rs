//! The `GEMI` index file.
//!
//! ```text
//! header    magic "GEMI" | version u32 | scalar width u32
//! sections  tag u32 | length u64 | body      (tags 1..=7, in order)
//! trailer   CRC-64/XZ of every preceding byte, u64
//! ```
//!
//! Vector components and centroids are stored at the index's scalar width;
//! distances and scores are stored as `f64`. Saving a loaded index
//! reproduces the original bytes.

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use crate::cluster::{ClusterSpace, CutoffModel, TreeNode};
use crate::error::{Error, Result};
use crate::graph::{BuildParams, Edge, GemGraph, GemIndex};
use crate::io::bytes::{Reader, Writer};
use crate::metric::{CodeSet, Codebook};
use crate::scalar::Scalar;
use crate::types::{Corpus, SetId, SimilarityKind, VectorSet};

pub const INDEX_MAGIC: [u8; 4] = *b"GEMI";
pub const INDEX_VERSION: u32 = 1;

const CHECKSUM: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

const TAG_PARAMS: u32 = 1;
const TAG_CODEBOOK: u32 = 2;
const TAG_CLUSTERS: u32 = 3;
const TAG_VECTORS: u32 = 4;
const TAG_CODES: u32 = 5;
const TAG_CUTOFF: u32 = 6;
const TAG_GRAPH: u32 = 7;

fn write_params(w: &mut Writer, p: &BuildParams) {
    w.u32(p.kind.code());
    w.usize(p.k1());
    w.usize(p.k2());
    w.usize(p.f());
    w.usize(p.m);
    w.usize(p.ef_construction);
    w.usize(p.r_max);
    w.usize(p.fallback_r);
    w.f64(p.shortcut_frac);
    w.usize(p.f_prime);
    w.usize(p.shortcut_cap);
    w.usize(p.kmeans_iters);
    w.f64(p.sample_frac);
    w.u32(p.tfidf_pruning as u32);
    w.usize(p.tree_max_depth);
    w.usize(p.tree_min_leaf);
    w.usize(p.filter_t);
    w.u64(p.seed);
}

fn read_params(r: &mut Reader) -> Result<BuildParams> {
    let p = BuildParams {
        kind: SimilarityKind::from_code(r.u32()?)?,
        k1: Some(r.len_value()?),
        k2: Some(r.len_value()?),
        f: Some(r.len_value()?),
        m: r.len_value()?,
        ef_construction: r.len_value()?,
        r_max: r.len_value()?,
        fallback_r: r.len_value()?,
        shortcut_frac: r.f64()?,
        f_prime: r.len_value()?,
        shortcut_cap: r.len_value()?,
        kmeans_iters: r.len_value()?,
        sample_frac: r.f64()?,
        tfidf_pruning: match r.u32()? {
            0 => false,
            1 => true,
            v => return Err(Error::Malformed(format!("bad flag {v}"))),
        },
        tree_max_depth: r.len_value()?,
        tree_min_leaf: r.len_value()?,
        filter_t: r.len_value()?,
        seed: r.u64()?,
    };
    p.validate().map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(p)
}

fn read_vectors<T: Scalar>(r: &mut Reader, count: usize, dim: usize) -> Result<Vec<Vec<T>>> {
    (0..count)
        .map(|_| (0..dim).map(|_| r.scalar::<T>()).collect())
        .collect()
}

pub fn encode_index<T: Scalar>(index: &GemIndex<T>) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(&INDEX_MAGIC);
    w.u32(INDEX_VERSION);
    w.u32(T::WIDTH as u32);

    w.section(TAG_PARAMS, |w| write_params(w, index.params()));

    let cb = index.codebook();
    w.section(TAG_CODEBOOK, |w| {
        w.usize(cb.len());
        w.usize(cb.dim());
        for c in cb.centroids() {
            c.iter().for_each(|&x| w.scalar(x));
        }
        cb.pair_table().iter().for_each(|&d| w.f64(d));
    });

    let space = index.space();
    w.section(TAG_CLUSTERS, |w| {
        w.usize(space.len());
        w.u64(space.n_sets());
        for c in space.index_centroids() {
            c.iter().for_each(|&x| w.scalar(x));
        }
        space.quant_to_index().iter().for_each(|&j| w.u32(j));
        space.doc_freq().iter().for_each(|&df| w.u64(df));
    });

    let corpus = index.corpus();
    w.section(TAG_VECTORS, |w| {
        w.usize(corpus.len());
        w.usize(corpus.dim());
        for set in corpus.sets() {
            w.u32(set.len() as u32);
            set.as_flat().iter().for_each(|&x| w.scalar(x));
        }
    });

    w.section(TAG_CODES, |w| {
        w.usize(index.codes().len());
        for c in index.codes() {
            w.u32(c.len() as u32);
            c.codes().iter().for_each(|&x| w.u32(x));
        }
    });

    w.section(TAG_CUTOFF, |w| match index.cutoff() {
        None => w.u32(0),
        Some(model) => {
            w.u32(1);
            w.usize(model.r_max());
            w.usize(model.max_depth());
            w.usize(model.nodes().len());
            for node in model.nodes() {
                match *node {
                    TreeNode::Leaf { label } => {
                        w.u8(0);
                        w.u32(label);
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.u8(1);
                        w.u32(feature);
                        w.f64(threshold);
                        w.u32(left);
                        w.u32(right);
                    }
                }
            }
        }
    });

    let g = index.graph();
    w.section(TAG_GRAPH, |w| {
        w.usize(g.len());
        w.usize(g.degree_cap());
        w.usize(g.shortcut_cap());
        w.usize(g.n_clusters());
        for v in 0..g.len() as u32 {
            w.u8(!g.is_live(v) as u8);
            w.u32(g.degree(v) as u32);
            for e in g.neighbors(v) {
                w.u32(e.to);
                w.u8(e.shortcut as u8);
            }
            w.u32(g.membership(v).len() as u32);
            g.membership(v).iter().for_each(|&c| w.u32(c));
        }
        for c in 0..g.n_clusters() as u32 {
            w.usize(g.members(c).len());
            g.members(c).iter().for_each(|&v| w.u32(v));
        }
    });

    let sum = CHECKSUM.checksum(&w.buf);
    w.u64(sum);
    w.buf
}

pub fn decode_index<T: Scalar>(bytes: &[u8]) -> Result<GemIndex<T>> {
    let mut head = Reader::new(bytes, "index file");
    let magic: [u8; 4] = head.take(4)?.try_into().expect("4 bytes");
    if magic != INDEX_MAGIC {
        return Err(Error::BadMagic {
            expected: INDEX_MAGIC,
            found: magic,
        });
    }
    let version = head.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::BadVersion(version));
    }
    let width = head.u32()?;
    if width as usize != T::WIDTH {
        return Err(Error::Malformed(format!(
            "index stores {width}-byte scalars, loader expects {}",
            T::WIDTH
        )));
    }
    if bytes.len() < 20 {
        return Err(Error::Truncated(
            "index file shorter than header and checksum".into(),
        ));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
    let computed = CHECKSUM.checksum(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    let mut r = Reader::new(&body[12..], "index file");

    let params = {
        let mut s = r.section(TAG_PARAMS, "params")?;
        let p = read_params(&mut s)?;
        s.finish()?;
        p
    };

    let codebook = {
        let mut s = r.section(TAG_CODEBOOK, "codebook")?;
        let k1 = s.len_value()?;
        let dim = s.len_value()?;
        let centroids = read_vectors::<T>(&mut s, k1, dim)?;
        let pair = (0..k1 * k1).map(|_| s.f64()).collect::<Result<Vec<_>>>()?;
        s.finish()?;
        Codebook::from_parts(params.kind, centroids, pair)?
    };

    let space = {
        let mut s = r.section(TAG_CLUSTERS, "clusters")?;
        let k2 = s.len_value()?;
        let n_sets = s.u64()?;
        let centroids = read_vectors::<T>(&mut s, k2, codebook.dim())?;
        let q2i = (0..codebook.len())
            .map(|_| s.u32())
            .collect::<Result<Vec<_>>>()?;
        let df = (0..k2).map(|_| s.u64()).collect::<Result<Vec<_>>>()?;
        s.finish()?;
        ClusterSpace::from_parts(params.kind, centroids, q2i, df, n_sets)?
    };

    let corpus = {
        let mut s = r.section(TAG_VECTORS, "vectors")?;
        let n = s.len_value()?;
        let dim = s.len_value()?;
        let mut sets = Vec::with_capacity(n.min(s.remaining()));
        for id in 0..n {
            let m = s.u32()? as usize;
            let data = (0..m * dim)
                .map(|_| s.scalar::<T>())
                .collect::<Result<Vec<_>>>()?;
            sets.push(VectorSet::from_flat(id as SetId, dim, data)?);
        }
        s.finish()?;
        Corpus::new(sets)?
    };

    let codes = {
        let mut s = r.section(TAG_CODES, "codes")?;
        let n = s.len_value()?;
        let mut out = Vec::with_capacity(n.min(s.remaining()));
        for id in 0..n {
            let m = s.u32()? as usize;
            let c = (0..m).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
            out.push(CodeSet::new(id as SetId, c)?);
        }
        s.finish()?;
        out
    };

    let cutoff = {
        let mut s = r.section(TAG_CUTOFF, "cutoff")?;
        let model = match s.u32()? {
            0 => None,
            1 => {
                let r_max = s.len_value()?;
                let max_depth = s.len_value()?;
                let n = s.len_value()?;
                let mut nodes = Vec::with_capacity(n.min(s.remaining()));
                for _ in 0..n {
                    nodes.push(match s.u8()? {
                        0 => TreeNode::Leaf { label: s.u32()? },
                        1 => TreeNode::Split {
                            feature: s.u32()?,
                            threshold: s.f64()?,
                            left: s.u32()?,
                            right: s.u32()?,
                        },
                        t => return Err(Error::Malformed(format!("bad tree node kind {t}"))),
                    });
                }
                Some(CutoffModel::from_parts(nodes, r_max, max_depth)?)
            }
            v => return Err(Error::Malformed(format!("bad cutoff flag {v}"))),
        };
        s.finish()?;
        model
    };

    let graph = {
        let mut s = r.section(TAG_GRAPH, "graph")?;
        let n = s.len_value()?;
        let degree_cap = s.len_value()?;
        let shortcut_cap = s.len_value()?;
        let k2 = s.len_value()?;
        let mut adjacency = Vec::with_capacity(n.min(s.remaining()));
        let mut tombstones = Vec::with_capacity(n.min(s.remaining()));
        let mut membership = Vec::with_capacity(n.min(s.remaining()));
        let flag = |v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Malformed(format!("bad flag byte {v}"))),
        };
        for _ in 0..n {
            tombstones.push(flag(s.u8()?)?);
            let deg = s.u32()? as usize;
            let mut edges = Vec::with_capacity(deg.min(s.remaining()));
            for _ in 0..deg {
                let to = s.u32()?;
                edges.push(Edge {
                    to,
                    shortcut: flag(s.u8()?)?,
                });
            }
            adjacency.push(edges);
            let nc = s.u32()? as usize;
            membership.push((0..nc).map(|_| s.u32()).collect::<Result<Vec<_>>>()?);
        }
        let mut members = Vec::with_capacity(k2.min(s.remaining()));
        for _ in 0..k2 {
            let count = s.len_value()?;
            members.push((0..count).map(|_| s.u32()).collect::<Result<Vec<_>>>()?);
        }
        s.finish()?;
        GemGraph::from_parts(
            adjacency,
            tombstones,
            degree_cap,
            shortcut_cap,
            membership,
            members,
        )?
    };
    r.finish()?;

    GemIndex::from_parts(params, corpus, codebook, space, codes, cutoff, graph)
}

pub fn save_index<T: Scalar>(index: &GemIndex<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_index(index))?;
    Ok(())
}

pub fn load_index<T: Scalar>(path: impl AsRef<Path>) -> Result<GemIndex<T>> {
    decode_index(&fs::read(path)?)
}

/// Reads only the header's scalar width (4 or 8) so callers can pick the
/// matching loader.
pub fn index_scalar_width(path: impl AsRef<Path>) -> Result<u32> {
    let bytes = fs::read(path)?;
    let mut r = Reader::new(&bytes, "index file");
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if magic != INDEX_MAGIC {
        return Err(Error::BadMagic {
            expected: INDEX_MAGIC,
            found: magic,
        });
    }
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::BadVersion(version));
    }
    r.u32()
}
