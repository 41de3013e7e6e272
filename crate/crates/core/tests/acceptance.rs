//! End-to-end acceptance checks. Each criterion runs on its own thread and
//! prints one PASS/FAIL line; the binary exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use gem_core::cluster::TrainingPair;
use gem_core::eval::{
    brute_force_topk, mrr_at_k, oracle_qrels, recall_at_k, run_benchmark, success_at_k, MvgIndex,
    Qrels, Retriever,
};
use gem_core::io::{decode_index, encode_index, load_index, save_index};
use gem_core::metric::{build_codebook, chamfer_distance, emd, encode, qch, qemd};
use gem_core::search::SearchParams;
use gem_core::synth::{generate, SynthConfig, SynthData};
use gem_core::types::normalize_corpus;
use gem_core::{BuildParams, Corpus, GemIndex, SetId, SimilarityKind, VectorSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_set(
    rng: &mut ChaCha8Rng,
    id: SetId,
    m: usize,
    d: usize,
    kind: SimilarityKind,
) -> VectorSet<f64> {
    let rows = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let set = VectorSet::new(id, rows).unwrap();
    match kind {
        SimilarityKind::Cosine => set.normalized().unwrap(),
        SimilarityKind::L2 => set,
    }
}

fn c1_exhaustive_equivalence() -> Outcome {
    let start = Instant::now();
    let data = generate::<f32>(&SynthConfig {
        n_sets: 200,
        dim: 8,
        m_min: 3,
        m_max: 8,
        n_queries: 50,
        seed: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    let index = GemIndex::build(
        &data.corpus,
        &BuildParams {
            seed: 1,
            ..BuildParams::default()
        },
        &[],
    )
    .unwrap();
    let kind = index.params().kind;
    let params = SearchParams {
        k: 10,
        t: index.params().k2(),
        ef_search: 200,
        rerank_k: 200,
        deterministic: true,
        ..SearchParams::default()
    };
    let normalized = normalize_corpus(&data.corpus, kind).unwrap();
    let mut mismatches = 0;
    for q in &data.queries {
        let got = index.search(q, &params).unwrap().ids();
        let want: Vec<SetId> = brute_force_topk(&q.prepared(kind).unwrap(), &normalized, 10, kind)
            .unwrap()
            .into_iter()
            .map(|h| h.0)
            .collect();
        mismatches += usize::from(got != want);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 30.0,
        format!("{mismatches}/50 queries differ from the exact top-10, {secs:.1}s"),
    )
}

fn c2_default_recall() -> Outcome {
    let start = Instant::now();
    let mut per_seed = Vec::new();
    for seed in 0..3 {
        let data = generate::<f32>(&SynthConfig {
            n_sets: 400,
            n_topics: 8,
            n_queries: 50,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let index = GemIndex::build(
            &data.corpus,
            &BuildParams {
                seed,
                ..BuildParams::default()
            },
            &[],
        )
        .unwrap();
        let qrels = oracle_qrels(&data.queries, &data.corpus, 10, index.params().kind).unwrap();
        let report =
            run_benchmark(&index, &data.queries, &qrels, &SearchParams::default(), 1).unwrap();
        per_seed.push(report.recall_at_k);
    }
    let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mean >= 0.90 && secs < 60.0,
        format!("mean recall@10 {mean:.3} (per seed {per_seed:.3?}), {secs:.1}s"),
    )
}

fn c3_chamfer_below_emd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let kind = if i % 2 == 0 {
            SimilarityKind::L2
        } else {
            SimilarityKind::Cosine
        };
        let d = rng.random_range(1..=8);
        let (ma, mb) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let a = random_set(&mut rng, 0, ma, d, kind);
        let b = random_set(&mut rng, 1, mb, d, kind);
        let gap = chamfer_distance(&a, &b, kind).unwrap() - emd(&a, &b, kind).unwrap().cost;
        worst = worst.max(gap);
    }
    outcome(
        worst <= 1e-8,
        format!("max CH - EMD over 1000 pairs = {worst:.3e}"),
    )
}

/// Minimum over all bijections of the summed ground distance, by
/// enumerating every permutation.
fn min_permutation_cost(a: &VectorSet<f64>, b: &VectorSet<f64>, kind: SimilarityKind) -> f64 {
    fn go(i: usize, used: &mut [bool], acc: f64, cost: &[Vec<f64>], best: &mut f64) {
        if i == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, used, acc + cost[i][j], cost, best);
                used[j] = false;
            }
        }
    }
    let cost: Vec<Vec<f64>> = a
        .vectors()
        .map(|x| b.vectors().map(|y| kind.distance(x, y)).collect())
        .collect();
    let mut best = f64::INFINITY;
    go(0, &mut vec![false; cost.len()], 0.0, &cost, &mut best);
    best
}

fn c4_emd_axioms() -> Outcome {
    let kind = SimilarityKind::L2;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut asym, mut self_cost, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let sets: Vec<VectorSet<f64>> = (0..3)
            .map(|i| {
                let m = rng.random_range(1..=6);
                random_set(&mut rng, i, m, d, kind)
            })
            .collect();
        let e = |x: usize, y: usize| emd(&sets[x], &sets[y], kind).unwrap().cost;
        asym = asym.max((e(0, 1) - e(1, 0)).abs());
        self_cost = self_cost.max(e(0, 0).abs());
        slack = slack.min(e(0, 1) + e(1, 2) - e(0, 2));
    }
    let mut perm_err = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=8);
        let m = rng.random_range(1..=6);
        let a = random_set(&mut rng, 0, m, d, kind);
        let b = random_set(&mut rng, 1, m, d, kind);
        let want = min_permutation_cost(&a, &b, kind) / m as f64;
        perm_err = perm_err.max((emd(&a, &b, kind).unwrap().cost - want).abs());
    }
    outcome(
        asym <= 1e-8 && self_cost <= 1e-9 && slack >= -1e-8 && perm_err <= 1e-9,
        format!(
            "asymmetry {asym:.1e}, self-distance {self_cost:.1e}, min triangle slack {slack:.3e}, \
             permutation-oracle error {perm_err:.1e}"
        ),
    )
}

fn c5_quantization_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut emd_err, mut ch_err) = (0.0f64, 0.0f64);
    for case in 0..200 {
        let kind = if case % 2 == 0 {
            SimilarityKind::L2
        } else {
            SimilarityKind::Cosine
        };
        let d = rng.random_range(2..=8);
        let k1 = rng.random_range(4..=24);
        let centroids: Vec<Vec<f64>> = random_set(&mut rng, 0, k1, d, kind)
            .vectors()
            .map(<[f64]>::to_vec)
            .collect();
        let codebook = build_codebook(centroids.clone(), kind).unwrap();
        let mut pick = |id: SetId| {
            let m = rng.random_range(1..=6);
            VectorSet::new(
                id,
                (0..m)
                    .map(|_| centroids[rng.random_range(0..k1)].clone())
                    .collect(),
            )
            .unwrap()
        };
        let (a, b) = (pick(0), pick(1));
        let (ca, cb) = (
            encode(&a, &codebook).unwrap(),
            encode(&b, &codebook).unwrap(),
        );
        emd_err = emd_err
            .max((qemd(&ca, &cb, &codebook).unwrap() - emd(&a, &b, kind).unwrap().cost).abs());
        let direct: f64 = a
            .vectors()
            .map(|x| {
                b.vectors()
                    .map(|y| kind.distance(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        ch_err = ch_err.max((qch(&ca, &cb, &codebook).unwrap() - direct).abs());
    }
    outcome(
        emd_err <= 1e-9 && ch_err <= 1e-9,
        format!(
            "max |qEMD - EMD| {emd_err:.1e}, max |qCH - quantized CH| {ch_err:.1e} over 200 cases"
        ),
    )
}

fn c6_tfidf_pruning() -> Outcome {
    let data = generate::<f32>(&SynthConfig {
        n_sets: 400,
        stopword_frac: 0.2,
        n_training: 300,
        seed: 6,
        ..SynthConfig::default()
    })
    .unwrap();
    let params = BuildParams {
        k2: Some(16),
        seed: 6,
        ..BuildParams::default()
    };
    let adaptive = GemIndex::build(&data.corpus, &params, &data.training).unwrap();
    let naive = GemIndex::build(
        &data.corpus,
        &BuildParams {
            tfidf_pruning: false,
            ..params.clone()
        },
        &[],
    )
    .unwrap();
    let qrels = oracle_qrels(&data.queries, &data.corpus, 10, params.kind).unwrap();
    let sp = SearchParams::default();
    let r_adaptive = run_benchmark(&adaptive, &data.queries, &qrels, &sp, 1)
        .unwrap()
        .recall_at_k;
    let r_naive = run_benchmark(&naive, &data.queries, &qrels, &sp, 1)
        .unwrap()
        .recall_at_k;
    let (m_adaptive, m_naive) = (
        adaptive.graph().mean_membership(),
        naive.graph().mean_membership(),
    );
    outcome(
        adaptive.cutoff().is_some() && m_adaptive <= 0.5 * m_naive && (r_adaptive - r_naive).abs() <= 0.02,
        format!(
            "mean |C_top| {m_adaptive:.3} vs naive {m_naive:.3}; recall@10 {r_adaptive:.3} vs {r_naive:.3}"
        ),
    )
}

/// Cheapest configuration, by exact evaluations and then by ef, whose
/// recall@10 reaches `target`.
fn cheapest<R: Retriever<f32>>(
    r: &R,
    data: &SynthData<f32>,
    qrels: &Qrels,
    target: f64,
) -> Option<(f64, f64)> {
    for rerank_k in [10, 12, 15, 20, 25, 30, 40, 50, 60, 80, 100] {
        for ef in [64, 96, 128, 192, 256] {
            let params = SearchParams {
                rerank_k,
                ef_search: ef.max(rerank_k),
                ..SearchParams::default()
            };
            let report = run_benchmark(r, &data.queries, qrels, &params, 1).unwrap();
            if report.recall_at_k >= target {
                return Some((report.mean_exact_evals, report.recall_at_k));
            }
        }
    }
    None
}

fn c7_ablation_direction() -> Outcome {
    const TARGET: f64 = 0.95;
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let data = generate::<f32>(&SynthConfig {
            n_sets: 400,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let params = BuildParams {
            seed,
            ..BuildParams::default()
        };
        let gem = GemIndex::build(&data.corpus, &params, &[]).unwrap();
        let mvg = MvgIndex::build(&data.corpus, &params).unwrap();
        let qrels = oracle_qrels(&data.queries, &data.corpus, 10, params.kind).unwrap();
        match (
            cheapest(&gem, &data, &qrels, TARGET),
            cheapest(&mvg, &data, &qrels, TARGET),
        ) {
            (Some((ge, gr)), Some((me, mr))) => {
                let matched = (gr - mr).abs() <= 0.02;
                wins += usize::from(matched && ge <= me);
                lines.push(format!(
                    "seed {seed}: gem {ge:.0}@{gr:.3} mvg {me:.0}@{mr:.3}"
                ));
            }
            (g, m) => lines.push(format!(
                "seed {seed}: target unreached (gem {g:?}, mvg {m:?})"
            )),
        }
    }
    outcome(
        wins >= 4,
        format!(
            "GEM <= MVG exact evaluations in {wins}/5 seeds [{}]",
            lines.join("; ")
        ),
    )
}

/// Documents along a line, plus planted sets that hold one token next to a
/// query and the rest of their mass at the far end of the line.
fn planted_chain(n_chain: usize, n_pairs: usize) -> (Corpus<f64>, Vec<VectorSet<f64>>) {
    let mut sets = Vec::new();
    for i in 0..n_chain {
        let x = i as f64;
        let rows = vec![
            vec![x, 0.1],
            vec![x + 0.1, -0.1],
            vec![x - 0.1, 0.0],
            vec![x, -0.05],
        ];
        sets.push(VectorSet::new(i as SetId, rows).unwrap());
    }
    let mut queries = Vec::new();
    for j in 0..n_pairs {
        let (ax, ay) = (10.0 + 3.0 * j as f64, 2.0);
        let far = 250.0 + 3.0 * j as f64;
        let mut rows = vec![vec![ax, ay]];
        rows.extend((0..5).map(|t| vec![far + 0.05 * t as f64, 0.02 * t as f64]));
        sets.push(VectorSet::new((n_chain + j) as SetId, rows).unwrap());
        queries.push(VectorSet::new(j as SetId, vec![vec![ax, ay], vec![ax + 0.05, ay]]).unwrap());
    }
    (Corpus::new(sets).unwrap(), queries)
}

fn c8_shortcuts() -> Outcome {
    let (n_chain, n_pairs) = (300, 10);
    let (corpus, queries) = planted_chain(n_chain, n_pairs);
    let pairs: Vec<TrainingPair<f64>> = queries
        .iter()
        .enumerate()
        .map(|(j, q)| TrainingPair {
            query: q.clone(),
            positive: (n_chain + j) as SetId,
        })
        .collect();
    let params = BuildParams {
        kind: SimilarityKind::L2,
        k2: Some(1),
        m: 8,
        f: Some(4),
        ef_construction: 32,
        shortcut_frac: 1.0,
        tree_min_leaf: 1000,
        ..BuildParams::default()
    };
    let plain = GemIndex::build(&corpus, &params, &[]).unwrap();
    let (boosted, report) = GemIndex::build_with_report(&corpus, &params, &pairs).unwrap();

    let search = SearchParams {
        t: 1,
        deterministic: true,
        ..SearchParams::default()
    };
    let full = SearchParams {
        ef_search: corpus.len(),
        ..search.clone()
    };
    let qrels = oracle_qrels(&queries, &corpus, 10, SimilarityKind::L2).unwrap();
    let mut far_apart = 0;
    for (j, q) in queries.iter().enumerate() {
        let top = plain.search(q, &search).unwrap().hits[0].0 as u32;
        let hops = plain.graph().hop_distance(top, (n_chain + j) as u32);
        far_apart += usize::from(hops.is_none_or(|h| h >= 4));
    }
    let mean_depth = |index: &GemIndex<f64>| {
        let total: u32 = queries
            .iter()
            .enumerate()
            .map(|(j, q)| {
                let (_, heap) = index.search_traced(q, &full).unwrap();
                heap.get((n_chain + j) as u32)
                    .map_or(u32::MAX / 64, |c| c.depth)
            })
            .sum();
        total as f64 / queries.len() as f64
    };
    let (before, after) = (mean_depth(&plain), mean_depth(&boosted));
    let recall = |index: &GemIndex<f64>| {
        run_benchmark(index, &queries, &qrels, &search, 1)
            .unwrap()
            .recall_at_k
    };
    let (r_before, r_after) = (recall(&plain), recall(&boosted));
    outcome(
        far_apart == n_pairs && report.shortcuts_added > 0 && after < before && r_after >= r_before,
        format!(
            "{far_apart}/{n_pairs} pairs >= 4 hops apart, {} shortcuts; mean hops to target {before:.1} -> {after:.1}; \
             recall@10 {r_before:.3} -> {r_after:.3}",
            report.shortcuts_added
        ),
    )
}

fn c9_maintenance() -> Outcome {
    let data = generate::<f32>(&SynthConfig {
        n_sets: 420,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let sets = data.corpus.sets();
    let base = Corpus::new(sets[..400].to_vec()).unwrap();
    // One coarse cluster per planted topic, so that sets span several
    // clusters and inserts go through the bridge merge.
    let build = BuildParams {
        k2: Some(8),
        seed: 9,
        ..BuildParams::default()
    };
    let mut index = GemIndex::build(&base, &build, &[]).unwrap();
    let m = index.params().m;
    let mut problems = Vec::new();
    let check = |index: &GemIndex<f32>, what: &str, problems: &mut Vec<String>| {
        if let Err(e) = index.graph().check_invariants(m) {
            problems.push(format!("{what}: {e}"));
        }
    };
    check(&index, "build", &mut problems);

    let params = SearchParams::default();
    let (mut rank_one, mut bridge_merges) = (0, 0);
    for s in &sets[400..] {
        let report = index.insert(s).unwrap();
        bridge_merges += report.bridges.len();
        check(&index, "insert", &mut problems);
        let g = index.graph();
        for b in &report.bridges {
            if !b.uncovered(g).is_empty() {
                problems.push(format!(
                    "insert {}: bridge lost clusters {:?}",
                    s.id(),
                    b.uncovered(g)
                ));
            }
        }
        let p = s.id() as u32;
        for &c in g.membership(p) {
            let peers = g.members(c).iter().any(|&v| v != p && g.is_live(v));
            if peers && !g.regular_neighbors(p).any(|v| g.membership(v).contains(&c)) {
                problems.push(format!("insert {}: no neighbor in cluster {c}", s.id()));
            }
        }
        rank_one += usize::from(index.search(s, &params).unwrap().hits[0].0 == s.id());
    }

    let deleted: Vec<SetId> = (0..5).map(|i| 3 + 41 * i).chain(405..410).collect();
    for &id in &deleted {
        index.delete(id).unwrap();
        check(&index, "delete", &mut problems);
    }
    let mut leaked = 0;
    for q in data.queries.iter().chain(&sets[380..]) {
        let hits = index.search(q, &params).unwrap().ids();
        leaked += hits.iter().filter(|h| deleted.contains(h)).count();
    }
    outcome(
        rank_one == 20 && leaked == 0 && problems.is_empty() && bridge_merges > 0,
        format!(
            "{rank_one}/20 inserted sets at rank 1, {bridge_merges} bridge merges, {leaked} deleted ids returned, \
             {} invariant violations{}",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn c10_determinism_and_serialization() -> Outcome {
    let data = generate::<f32>(&SynthConfig {
        n_sets: 300,
        n_queries: 20,
        n_training: 40,
        seed: 10,
        ..SynthConfig::default()
    })
    .unwrap();
    let params = BuildParams {
        seed: 10,
        ..BuildParams::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.gemi"), dir.path().join("b.gemi"));
    let a = GemIndex::build(&data.corpus, &params, &data.training).unwrap();
    save_index(&a, &pa).unwrap();
    save_index(
        &GemIndex::build(&data.corpus, &params, &data.training).unwrap(),
        &pb,
    )
    .unwrap();
    let identical_files = std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap();

    let loaded = load_index::<f32>(&pa).unwrap();
    let reencoded = encode_index(&loaded) == encode_index(&a);
    let search = SearchParams {
        seed: 77,
        ..SearchParams::default()
    };
    let same_hits = data
        .queries
        .iter()
        .filter(|q| a.search(q, &search).unwrap() == loaded.search(q, &search).unwrap())
        .count();
    let mut corrupted = std::fs::read(&pa).unwrap();
    let mid = corrupted.len() / 2;
    corrupted[mid] ^= 1;
    let rejected = decode_index::<f32>(&corrupted).is_err();
    outcome(
        identical_files && reencoded && same_hits == 20 && rejected,
        format!(
            "builds byte-identical: {identical_files}, re-save identical: {reencoded}, \
             {same_hits}/20 queries identical after reload, corrupted file rejected: {rejected}"
        ),
    )
}

fn c11_metric_identities() -> Outcome {
    let data = generate::<f32>(&SynthConfig {
        n_sets: 200,
        n_queries: 40,
        seed: 11,
        ..SynthConfig::default()
    })
    .unwrap();
    let index = GemIndex::build(
        &data.corpus,
        &BuildParams {
            seed: 11,
            ..BuildParams::default()
        },
        &[],
    )
    .unwrap();
    let qrels = Qrels::from_pairs(
        data.queries
            .iter()
            .map(VectorSet::id)
            .zip(data.targets.iter().copied()),
    );
    let report = run_benchmark(&index, &data.queries, &qrels, &SearchParams::default(), 1).unwrap();
    let per_query_equal = report.per_query.iter().all(|q| q.recall == q.success);
    let single_equal = report.recall_at_k == report.success_at_k;

    let g: BTreeSet<SetId> = [1, 2, 3].into();
    let retrieved = [1, 2];
    let (r, s, mrr) = (
        recall_at_k(&retrieved, &g, 10).unwrap(),
        success_at_k(&retrieved, &g, 10).unwrap(),
        mrr_at_k(&retrieved, &g, 10).unwrap(),
    );
    let late = [9, 8, 2, 1];
    let mrr_late = mrr_at_k(&late, &g, 10).unwrap();
    let worked = r == 2.0 / 3.0 && s == 1.0 && mrr == 1.0 && mrr_late == 1.0 / 3.0;
    outcome(
        per_query_equal && single_equal && worked,
        format!(
            "R@10 {:.4} = S@10 {:.4} with one relevant each; worked example R {r:.4} S {s} MRR {mrr} \
             (first hit at rank 3: {mrr_late:.4})",
            report.recall_at_k, report.success_at_k
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("exhaustive equivalence", c1_exhaustive_equivalence),
        ("default-parameter recall", c2_default_recall),
        ("chamfer bounded by EMD", c3_chamfer_below_emd),
        ("EMD metric axioms", c4_emd_axioms),
        ("quantization consistency", c5_quantization_consistency),
        ("TF-IDF pruning effect", c6_tfidf_pruning),
        ("ablation direction vs flat graph", c7_ablation_direction),
        ("shortcut efficacy", c8_shortcuts),
        ("maintenance roundtrip", c9_maintenance),
        (
            "determinism and serialization",
            c10_determinism_and_serialization,
        ),
        ("metric identities", c11_metric_identities),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|&(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| outcome(false, "panicked".into()))
            })
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
