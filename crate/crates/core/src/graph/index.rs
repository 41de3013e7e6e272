//! The complete index: corpus, codebook, cluster space, cutoff model and
//! graph, with build, insert and lazy delete.

use rand::seq::index::sample;

use crate::cluster::{
    cutoff_features, label_cutoff, predict_cutoff, profile_from_codes, prune_clusters,
    train_cutoff_model, two_stage_cluster, ClusterSpace, CutoffModel, TfIdfProfile, TrainingPair,
};
use crate::error::{Error, Result};
use crate::graph::build::{BridgeReport, Placer};
use crate::graph::params::BuildParams;
use crate::graph::structure::GemGraph;
use crate::metric::{encode, CodeSet, Codebook};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::search::{cluster_filter, SearchParams, DEFAULT_EF_SEARCH};
use crate::types::{normalize_corpus, Corpus, SetId, VectorSet};

/// Outcome of one insertion: the new id and every bridge merge it caused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertReport {
    pub id: SetId,
    pub bridges: Vec<BridgeReport>,
}

/// Outcome of the build: shortcut statistics and the bridge merges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub shortcut_pairs: usize,
    pub shortcuts_added: usize,
    pub bridges: Vec<BridgeReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GemIndex<T> {
    params: BuildParams,
    corpus: Corpus<T>,
    codebook: Codebook<T>,
    space: ClusterSpace<T>,
    codes: Vec<CodeSet>,
    cutoff: Option<CutoffModel>,
    graph: GemGraph,
}

impl<T: Scalar> GemIndex<T> {
    pub fn build(
        corpus: &Corpus<T>,
        params: &BuildParams,
        pairs: &[TrainingPair<T>],
    ) -> Result<Self> {
        Ok(Self::build_with_report(corpus, params, pairs)?.0)
    }

    /// Clusters the corpus, assigns every set its `C_top`, builds each
    /// cluster graph in ascending cluster order and injects shortcuts.
    pub fn build_with_report(
        corpus: &Corpus<T>,
        params: &BuildParams,
        pairs: &[TrainingPair<T>],
    ) -> Result<(Self, BuildReport)> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let params = params.resolve(corpus.len(), corpus.total_vectors())?;
        let kind = params.kind;
        let corpus = normalize_corpus(corpus, kind)?;
        for pair in pairs {
            if pair.positive as usize >= corpus.len() {
                return Err(Error::UnknownDocId(pair.positive));
            }
            pair.query.check_dim(corpus.dim())?;
        }
        let pairs: Vec<TrainingPair<T>> = pairs
            .iter()
            .map(|p| {
                Ok(TrainingPair {
                    query: p.query.prepared(kind)?,
                    positive: p.positive,
                })
            })
            .collect::<Result<_>>()?;

        let rng = SeededRng::new(params.seed);
        let (codebook, space) = two_stage_cluster(
            &corpus,
            params.k1(),
            params.k2(),
            params.sample_frac,
            params.kmeans_iters,
            kind,
            &mut rng.fork(0),
        )?;
        let codes: Vec<CodeSet> = corpus
            .sets()
            .iter()
            .map(|s| encode(s, &codebook))
            .collect::<Result<_>>()?;
        let n = space.n_sets();
        let profiles: Vec<TfIdfProfile> = codes
            .iter()
            .map(|c| profile_from_codes(c, &space, n))
            .collect::<Result<_>>()?;

        let cutoff =
            if params.tfidf_pruning && !pairs.is_empty() && pairs.len() >= params.tree_min_leaf {
                let mut features = Vec::with_capacity(pairs.len());
                let mut labels = Vec::with_capacity(pairs.len());
                for pair in &pairs {
                    let profile = &profiles[pair.positive as usize];
                    let query_clusters = cluster_filter(&pair.query, &space, params.filter_t)?;
                    labels.push(label_cutoff(profile, &query_clusters, params.r_max));
                    features.push(cutoff_features(
                        profile,
                        codes[pair.positive as usize].len(),
                        params.r_max,
                    ));
                }
                Some(train_cutoff_model(
                    &features,
                    &labels,
                    params.r_max,
                    params.tree_max_depth,
                    params.tree_min_leaf,
                )?)
            } else {
                None
            };

        let mut index = Self {
            graph: GemGraph::new(space.len(), params.m, params.shortcut_cap),
            params,
            corpus,
            codebook,
            space,
            codes,
            cutoff,
        };
        for (profile, codes) in profiles.iter().zip(&index.codes) {
            let c_top = index.c_top(profile, codes.len())?;
            index.graph.add_vertex(c_top);
        }

        let mut report = BuildReport::default();
        {
            let Self {
                params,
                codebook,
                codes,
                graph,
                ..
            } = &mut index;
            let mut placer = Placer::new(
                codebook,
                codes,
                params.m,
                params.f(),
                params.ef_construction,
            );
            let mut in_pool = vec![false; graph.len()];
            for c in 0..graph.n_clusters() as u32 {
                let members = graph.members(c).to_vec();
                let mut pool: Vec<u32> = Vec::with_capacity(members.len());
                placer.clear_cache();
                for &p in &members {
                    let candidates =
                        placer.nearest_in_pool(graph, p, &pool, |x| in_pool[x as usize]);
                    report.bridges.extend(placer.place(graph, p, &candidates));
                    pool.push(p);
                    in_pool[p as usize] = true;
                }
                for &p in &pool {
                    in_pool[p as usize] = false;
                }
            }
        }

        let (sampled, added) = index.inject_shortcuts(&pairs, &mut rng.fork(1))?;
        report.shortcut_pairs = sampled;
        report.shortcuts_added = added;
        Ok((index, report))
    }

    /// `C_top` for a set: every profiled cluster without pruning, the
    /// model's cutoff when trained, the fallback cutoff otherwise.
    fn c_top(&self, profile: &TfIdfProfile, m: usize) -> Result<Vec<u32>> {
        let r = if !self.params.tfidf_pruning {
            profile.len()
        } else if let Some(model) = &self.cutoff {
            predict_cutoff(model, profile, m)
        } else {
            self.params.fallback_r
        };
        prune_clusters(profile, r.max(1))
    }

    /// Adds shortcuts for a `shortcut_frac` sample of the pairs. Returns the number
    /// of sampled pairs and of shortcuts added.
    fn inject_shortcuts(
        &mut self,
        pairs: &[TrainingPair<T>],
        rng: &mut SeededRng,
    ) -> Result<(usize, usize)> {
        let n_sample = ((pairs.len() as f64) * self.params.shortcut_frac).round() as usize;
        if n_sample == 0 {
            return Ok((0, 0));
        }
        let mut picked = sample(rng, pairs.len(), n_sample.min(pairs.len())).into_vec();
        picked.sort_unstable();
        let f_prime = self.params.f_prime;
        let search = SearchParams {
            k: f_prime,
            t: self.params.filter_t,
            ef_search: f_prime.max(DEFAULT_EF_SEARCH),
            rerank_k: f_prime,
            deterministic: true,
            max_threads: 1,
            seed: self.params.seed,
        };
        let mut added = 0;
        for &i in &picked {
            let pair = &pairs[i];
            let target = pair.positive as u32;
            if !self.graph.is_live(target) {
                continue;
            }
            let hits = self.search(&pair.query, &search)?.hits;
            if hits.iter().any(|&(id, _)| id == pair.positive) {
                continue;
            }
            let Some(&(top, _)) = hits.first() else {
                continue;
            };
            if self.graph.add_shortcut(top as u32, target) {
                added += 1;
            }
        }
        Ok((picked.len(), added))
    }

    /// Adds a set whose id must be the next dense id. The set is coded,
    /// counted into the document frequencies, assigned its `C_top` and
    /// linked cluster by cluster exactly as during the build.
    pub fn insert(&mut self, set: &VectorSet<T>) -> Result<InsertReport> {
        let id = set.id();
        let n = self.corpus.len() as SetId;
        if id < n {
            return Err(Error::DuplicateId(id));
        }
        if id > n {
            return Err(Error::NonDenseIds {
                position: n as usize,
                id,
            });
        }
        set.check_dim(self.corpus.dim())?;
        let set = set.prepared(self.params.kind)?;
        let codes = encode(&set, &self.codebook)?;
        self.space.observe(&codes);
        let profile = profile_from_codes(&codes, &self.space, self.space.n_sets())?;
        let c_top = self.c_top(&profile, codes.len())?;
        self.corpus.push(set)?;
        self.codes.push(codes);
        let p = self.graph.add_vertex(c_top.clone());

        let Self {
            params,
            codebook,
            codes,
            graph,
            ..
        } = self;
        let mut placer = Placer::new(
            codebook,
            codes,
            params.m,
            params.f(),
            params.ef_construction,
        );
        let mut bridges = Vec::new();
        for &c in &c_top {
            let pool: Vec<u32> = graph
                .members(c)
                .iter()
                .copied()
                .filter(|&x| x != p)
                .collect();
            let candidates = placer.nearest_in_pool(graph, p, &pool, |x| {
                x != p && graph.membership(x).contains(&c)
            });
            bridges.extend(placer.place(graph, p, &candidates));
        }
        Ok(InsertReport { id, bridges })
    }

    /// Lazy deletion: the vertex stays traversable but is never returned.
    pub fn delete(&mut self, id: SetId) -> Result<()> {
        self.graph.tombstone(id)
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    /// The stored, normalized corpus (tombstoned sets included).
    pub fn corpus(&self) -> &Corpus<T> {
        &self.corpus
    }

    pub fn codebook(&self) -> &Codebook<T> {
        &self.codebook
    }

    pub fn space(&self) -> &ClusterSpace<T> {
        &self.space
    }

    pub fn codes(&self) -> &[CodeSet] {
        &self.codes
    }

    pub fn cutoff(&self) -> Option<&CutoffModel> {
        self.cutoff.as_ref()
    }

    pub fn graph(&self) -> &GemGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Mean number of clusters each set touches before pruning, `|C(P)|`.
    pub fn mean_profile_len(&self) -> f64 {
        if self.codes.is_empty() {
            return 0.0;
        }
        let total: usize = self
            .codes
            .iter()
            .map(|c| self.space.term_frequencies(c).len())
            .sum();
        total as f64 / self.codes.len() as f64
    }

    pub(crate) fn from_parts(
        params: BuildParams,
        corpus: Corpus<T>,
        codebook: Codebook<T>,
        space: ClusterSpace<T>,
        codes: Vec<CodeSet>,
        cutoff: Option<CutoffModel>,
        graph: GemGraph,
    ) -> Result<Self> {
        let n = corpus.len();
        let consistent = codes.len() == n
            && graph.len() == n
            && graph.n_clusters() == space.len()
            && space.quant_to_index().len() == codebook.len()
            && codebook.dim() == corpus.dim()
            && codes.iter().enumerate().all(|(i, c)| {
                c.set_id() == i as SetId && c.codes().iter().all(|&x| (x as usize) < codebook.len())
            });
        if !consistent {
            return Err(Error::Malformed("index sections disagree".into()));
        }
        Ok(Self {
            params,
            corpus,
            codebook,
            space,
            codes,
            cutoff,
            graph,
        })
    }
}
