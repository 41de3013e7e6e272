//! Seeded synthetic corpora with planted topics, shared stopword-like
//! tokens and queries drawn from known target documents.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cluster::TrainingPair;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::types::{Corpus, SetId, Vector, VectorSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_sets: usize,
    pub dim: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub n_topics: usize,
    pub subtopics_per_topic: usize,
    /// Spread of subtopic centers around their topic center.
    pub subtopic_spread: f64,
    /// Per-token noise around its subtopic center.
    pub token_noise: f64,
    /// Probability that a document token is a shared stopword token.
    pub stopword_frac: f64,
    pub n_stopwords: usize,
    pub n_queries: usize,
    pub n_training: usize,
    pub query_m_min: usize,
    pub query_m_max: usize,
    /// Noise added to each query token copied from its target document.
    pub query_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sets: 400,
            dim: 16,
            m_min: 4,
            m_max: 10,
            n_topics: 8,
            subtopics_per_topic: 6,
            subtopic_spread: 0.6,
            token_noise: 0.25,
            stopword_frac: 0.0,
            n_stopwords: 4,
            n_queries: 50,
            n_training: 0,
            query_m_min: 3,
            query_m_max: 6,
            query_noise: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData<T> {
    pub corpus: Corpus<T>,
    /// Topic of every document.
    pub topics: Vec<usize>,
    pub queries: Vec<VectorSet<T>>,
    /// Target document each query was drawn from.
    pub targets: Vec<SetId>,
    pub training: Vec<TrainingPair<T>>,
}

fn gaussian(rng: &mut SeededRng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn to_t<T: Scalar>(v: &[f64]) -> Vector<T> {
    v.iter().map(|&x| T::narrow(x)).collect()
}

pub fn generate<T: Scalar>(cfg: &SynthConfig) -> Result<SynthData<T>> {
    if cfg.n_sets == 0 || cfg.dim == 0 || cfg.n_topics == 0 || cfg.subtopics_per_topic == 0 {
        return Err(Error::InvalidParams("sizes must be positive".into()));
    }
    if cfg.m_min == 0
        || cfg.m_min > cfg.m_max
        || cfg.query_m_min == 0
        || cfg.query_m_min > cfg.query_m_max
    {
        return Err(Error::InvalidParams("need 1 <= m_min <= m_max".into()));
    }
    if !(0.0..=1.0).contains(&cfg.stopword_frac)
        || (cfg.stopword_frac > 0.0 && cfg.n_stopwords == 0)
    {
        return Err(Error::InvalidParams("bad stopword settings".into()));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let d = cfg.dim;
    let per_dim = 1.0 / (d as f64).sqrt();

    let topics: Vec<Vec<f64>> = (0..cfg.n_topics)
        .map(|_| unit(gaussian(&mut rng, d, 1.0)))
        .collect();
    let subtopics: Vec<Vec<Vec<f64>>> = topics
        .iter()
        .map(|t| {
            (0..cfg.subtopics_per_topic)
                .map(|_| {
                    unit(add(
                        t,
                        &gaussian(&mut rng, d, cfg.subtopic_spread * per_dim),
                    ))
                })
                .collect()
        })
        .collect();
    let stopwords: Vec<Vec<f64>> = (0..cfg.n_stopwords)
        .map(|_| unit(gaussian(&mut rng, d, 1.0)))
        .collect();

    // Raw tokens are kept in f64 with a flag marking content tokens.
    let mut docs: Vec<Vec<(Vec<f64>, bool)>> = Vec::with_capacity(cfg.n_sets);
    let mut doc_topics = Vec::with_capacity(cfg.n_sets);
    for _ in 0..cfg.n_sets {
        let topic = rng.random_range(0..cfg.n_topics);
        let m = rng.random_range(cfg.m_min..=cfg.m_max);
        let mut tokens = Vec::with_capacity(m);
        for _ in 0..m {
            if rng.random::<f64>() < cfg.stopword_frac {
                let s = &stopwords[rng.random_range(0..stopwords.len())];
                tokens.push((add(s, &gaussian(&mut rng, d, 0.02 * per_dim)), false));
            } else {
                let sub = &subtopics[topic][rng.random_range(0..cfg.subtopics_per_topic)];
                tokens.push((
                    add(sub, &gaussian(&mut rng, d, cfg.token_noise * per_dim)),
                    true,
                ));
            }
        }
        doc_topics.push(topic);
        docs.push(tokens);
    }

    let make_query = |rng: &mut SeededRng, target: usize, id: SetId| -> Result<VectorSet<T>> {
        let doc = &docs[target];
        let content: Vec<&Vec<f64>> = doc.iter().filter(|t| t.1).map(|t| &t.0).collect();
        let source: Vec<&Vec<f64>> = if content.is_empty() {
            doc.iter().map(|t| &t.0).collect()
        } else {
            content
        };
        let mq = rng.random_range(cfg.query_m_min..=cfg.query_m_max);
        let rows = (0..mq)
            .map(|_| {
                let base = source[rng.random_range(0..source.len())];
                to_t::<T>(&add(base, &gaussian(rng, d, cfg.query_noise * per_dim)))
            })
            .collect();
        VectorSet::new(id, rows)
    };

    let mut queries = Vec::with_capacity(cfg.n_queries);
    let mut targets = Vec::with_capacity(cfg.n_queries);
    for q in 0..cfg.n_queries {
        let target = rng.random_range(0..cfg.n_sets);
        queries.push(make_query(&mut rng, target, q as SetId)?);
        targets.push(target as SetId);
    }
    let mut training = Vec::with_capacity(cfg.n_training);
    for q in 0..cfg.n_training {
        let target = rng.random_range(0..cfg.n_sets);
        training.push(TrainingPair {
            query: make_query(&mut rng, target, q as SetId)?,
            positive: target as SetId,
        });
    }

    let sets = docs
        .iter()
        .enumerate()
        .map(|(i, tokens)| {
            VectorSet::new(i as SetId, tokens.iter().map(|t| to_t::<T>(&t.0)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthData {
        corpus: Corpus::new(sets)?,
        topics: doc_topics,
        queries,
        targets,
        training,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let cfg = SynthConfig {
            n_sets: 30,
            n_queries: 5,
            n_training: 7,
            stopword_frac: 0.2,
            ..SynthConfig::default()
        };
        let a = generate::<f32>(&cfg).unwrap();
        let b = generate::<f32>(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.corpus.len(), 30);
        assert_eq!(a.queries.len(), 5);
        assert_eq!(a.training.len(), 7);
        for s in a.corpus.sets() {
            assert!((cfg.m_min..=cfg.m_max).contains(&s.len()));
            assert_eq!(s.dim(), cfg.dim);
        }
        let c = generate::<f32>(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }
}
