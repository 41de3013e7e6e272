//! Tab-separated `qid\tdocid` files, used for relevance judgments and for
//! training pairs. Blank lines and lines starting with `#` are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cluster::TrainingPair;
use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::scalar::Scalar;
use crate::types::{SetId, VectorSet};

pub fn parse_id_pairs(text: &str) -> Result<Vec<(SetId, SetId)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Malformed(format!(
                "line {}: expected two tab-separated ids",
                lineno + 1
            )));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<SetId>()
                .map_err(|_| Error::Malformed(format!("line {}: bad id {s:?}", lineno + 1)))
        };
        out.push((parse(a)?, parse(b)?));
    }
    Ok(out)
}

pub fn format_id_pairs(pairs: impl IntoIterator<Item = (SetId, SetId)>) -> String {
    let mut s = String::new();
    for (a, b) in pairs {
        writeln!(s, "{a}\t{b}").expect("writing to a string");
    }
    s
}

/// Loads judgments and checks every document id against a corpus of
/// `n_docs` sets.
pub fn load_qrels(path: impl AsRef<Path>, n_docs: usize) -> Result<Qrels> {
    let qrels = Qrels::from_pairs(parse_id_pairs(&fs::read_to_string(path)?)?);
    qrels.validate(n_docs)?;
    Ok(qrels)
}

pub fn save_qrels(qrels: &Qrels, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_id_pairs(qrels.pairs()))?;
    Ok(())
}

/// Loads training pairs and resolves each query id against `queries` (by
/// set id). Positives are checked against a corpus of `n_docs` sets.
pub fn load_pairs<T: Scalar>(
    path: impl AsRef<Path>,
    queries: &[VectorSet<T>],
    n_docs: usize,
) -> Result<Vec<TrainingPair<T>>> {
    let by_id: HashMap<SetId, &VectorSet<T>> = queries.iter().map(|q| (q.id(), q)).collect();
    parse_id_pairs(&fs::read_to_string(path)?)?
        .into_iter()
        .map(|(q, d)| {
            let query = by_id
                .get(&q)
                .ok_or_else(|| Error::InconsistentQrels(format!("pair names unknown query {q}")))?;
            if d as usize >= n_docs {
                return Err(Error::UnknownDocId(d));
            }
            Ok(TrainingPair {
                query: (*query).clone(),
                positive: d,
            })
        })
        .collect()
}

pub fn save_pairs(pairs: &[(SetId, SetId)], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_id_pairs(pairs.iter().copied()))?;
    Ok(())
}
