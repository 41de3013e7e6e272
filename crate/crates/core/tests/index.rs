//! Index-level properties on small synthetic corpora: graph invariants
//! under mutation, exactness of exhaustive search, thread independence,
//! tombstones and persistence.

use gem_core::eval::{BruteForce, Retriever};
use gem_core::io::{load_corpus, load_index, save_corpus, save_index};
use gem_core::search::SearchParams;
use gem_core::synth::{generate, SynthConfig, SynthData};
use gem_core::{BuildParams, Corpus, GemIndex, SimilarityKind};
use proptest::prelude::*;

fn data(seed: u64, n_sets: usize, kind_l2: bool) -> SynthData<f32> {
    let mut d = generate::<f32>(&SynthConfig {
        n_sets,
        dim: 6,
        m_min: 2,
        m_max: 6,
        n_topics: 4,
        n_queries: 8,
        n_training: 12,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    if kind_l2 {
        // Spread the sets so that Euclidean distances are not all alike.
        let sets = d
            .corpus
            .sets()
            .iter()
            .map(|s| {
                let scaled: Vec<f32> = s
                    .as_flat()
                    .iter()
                    .map(|x| x * (1.0 + s.id() as f32 % 3.0))
                    .collect();
                gem_core::VectorSet::from_flat(s.id(), s.dim(), scaled).unwrap()
            })
            .collect();
        d.corpus = Corpus::new(sets).unwrap();
    }
    d
}

fn params(seed: u64, kind: SimilarityKind) -> BuildParams {
    BuildParams {
        kind,
        k1: Some(32),
        k2: Some(3),
        m: 6,
        ef_construction: 16,
        shortcut_frac: 0.5,
        tree_min_leaf: 4,
        seed,
        ..BuildParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn graph_invariants_survive_inserts_and_deletes(
        seed in 0u64..1000,
        l2 in any::<bool>(),
        deletions in prop::collection::vec(any::<prop::sample::Index>(), 0..8),
    ) {
        let kind = if l2 { SimilarityKind::L2 } else { SimilarityKind::Cosine };
        let d = data(seed, 50, l2);
        let sets = d.corpus.sets();
        let base = Corpus::new(sets[..40].to_vec()).unwrap();
        let training: Vec<_> = d.training.iter().filter(|t| t.positive < 40).cloned().collect();
        let mut index = GemIndex::build(&base, &params(seed, kind), &training).unwrap();
        let m = index.params().m;
        prop_assert_eq!(index.graph().check_invariants(m), Ok(()));
        for s in &sets[40..] {
            let report = index.insert(s).unwrap();
            prop_assert_eq!(report.id, s.id());
            prop_assert_eq!(index.graph().check_invariants(m), Ok(()));
            for b in &report.bridges {
                prop_assert!(b.uncovered(index.graph()).is_empty());
                prop_assert!(b.kept.len() <= m);
            }
        }
        let mut deleted = Vec::new();
        for ix in &deletions {
            let id = ix.index(index.len()) as u64;
            if index.graph().is_live(id as u32) {
                index.delete(id).unwrap();
                deleted.push(id);
            } else {
                prop_assert!(index.delete(id).is_err());
            }
        }
        prop_assert_eq!(index.graph().check_invariants(m), Ok(()));
        prop_assert_eq!(index.graph().live_count(), index.len() - deleted.len());

        let sp = SearchParams::default();
        for q in &d.queries {
            let res = index.search(q, &sp).unwrap();
            let ids = res.ids();
            prop_assert!(ids.iter().all(|id| !deleted.contains(id)));
            prop_assert!(ids.len() <= sp.k);
            let mut uniq = ids.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), ids.len());
            prop_assert!(res.hits.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
        }
    }

    #[test]
    fn exhaustive_search_is_exact(seed in 0u64..1000, l2 in any::<bool>()) {
        let kind = if l2 { SimilarityKind::L2 } else { SimilarityKind::Cosine };
        let d = data(seed, 40, l2);
        let mut index = GemIndex::build(&d.corpus, &params(seed, kind), &[]).unwrap();
        index.delete(seed % 40).unwrap();
        let oracle = BruteForce::from_index(&index);
        let sp = SearchParams::exhaustive(5, index.len(), index.params().k2());
        for q in &d.queries {
            prop_assert_eq!(index.search(q, &sp).unwrap().hits, oracle.retrieve(q, &sp).unwrap().hits);
        }
    }

    #[test]
    fn thread_count_does_not_change_results(seed in 0u64..1000, deterministic in any::<bool>()) {
        let d = data(seed, 60, false);
        let index = GemIndex::build(&d.corpus, &params(seed, SimilarityKind::Cosine), &d.training).unwrap();
        for q in &d.queries {
            let base = SearchParams { ef_search: 60, deterministic, seed, ..SearchParams::default() };
            let one = index.search(q, &base).unwrap();
            let four = index.search(q, &SearchParams { max_threads: 4, ..base.clone() }).unwrap();
            prop_assert_eq!(one, four);
        }
    }
}

#[test]
fn larger_beams_find_at_least_as_many_candidates() {
    let d = data(5, 80, false);
    let index = GemIndex::build(&d.corpus, &params(5, SimilarityKind::Cosine), &[]).unwrap();
    for q in &d.queries {
        let explored = |ef: usize| {
            let sp = SearchParams {
                ef_search: ef,
                rerank_k: 10,
                deterministic: true,
                ..SearchParams::default()
            };
            index.search(q, &sp).unwrap().stats.qch_evals
        };
        assert!(explored(10) <= explored(80));
    }
}

#[test]
fn builds_and_seeded_searches_repeat_exactly() {
    let d = data(8, 60, false);
    let p = params(8, SimilarityKind::Cosine);
    let a = GemIndex::build(&d.corpus, &p, &d.training).unwrap();
    let b = GemIndex::build(&d.corpus, &p, &d.training).unwrap();
    assert_eq!(a, b);
    let sp = SearchParams {
        seed: 3,
        ..SearchParams::default()
    };
    for q in &d.queries {
        assert_eq!(a.search(q, &sp).unwrap(), b.search(q, &sp).unwrap());
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let d = data(2, 40, false);
    let corpus_path = dir.path().join("corpus.gemv");
    save_corpus(&d.corpus, &corpus_path).unwrap();
    assert_eq!(load_corpus::<f32>(&corpus_path).unwrap(), d.corpus);

    let mut index =
        GemIndex::build(&d.corpus, &params(2, SimilarityKind::Cosine), &d.training).unwrap();
    index.delete(7).unwrap();
    let index_path = dir.path().join("index.gemi");
    save_index(&index, &index_path).unwrap();
    let back = load_index::<f32>(&index_path).unwrap();
    assert_eq!(back, index);
    let sp = SearchParams::default();
    for q in &d.queries {
        assert_eq!(back.search(q, &sp).unwrap(), index.search(q, &sp).unwrap());
    }
    assert!(load_index::<f64>(&index_path).is_err());
}

#[test]
fn a_loaded_index_accepts_inserts() {
    let dir = tempfile::tempdir().unwrap();
    let d = data(4, 45, false);
    let sets = d.corpus.sets();
    let base = Corpus::new(sets[..40].to_vec()).unwrap();
    let p = params(4, SimilarityKind::Cosine);
    let mut direct = GemIndex::build(&base, &p, &[]).unwrap();
    let path = dir.path().join("i.gemi");
    save_index(&direct, &path).unwrap();
    let mut loaded = load_index::<f32>(&path).unwrap();
    for s in &sets[40..] {
        direct.insert(s).unwrap();
        loaded.insert(s).unwrap();
    }
    assert_eq!(direct, loaded);
}
