//! Edge placement: per-cluster neighbor search under qEMD, first-time
//! connection with degree enforcement, and bridge-preserving neighbor
//! merges for sets that belong to several clusters.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use crate::graph::structure::GemGraph;
use crate::metric::{qemd_unchecked, CodeSet, Codebook};
use crate::scalar::Scalar;

/// The neighbor merge of one bridge update: every candidate considered and
/// the neighbors that were kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeReport {
    pub vertex: u32,
    pub candidates: Vec<u32>,
    pub kept: Vec<u32>,
}

impl BridgeReport {
    /// Clusters of `C_top(vertex)` represented among the candidates but not
    /// among the kept neighbors. Empty when the guarantee holds.
    pub fn uncovered(&self, graph: &GemGraph) -> Vec<u32> {
        let has = |set: &[u32], c: u32| set.iter().any(|&x| graph.membership(x).contains(&c));
        graph
            .membership(self.vertex)
            .iter()
            .copied()
            .filter(|&c| has(&self.candidates, c) && !has(&self.kept, c))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored(pub f64, pub u32);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Reusable visited marks for repeated searches over the same graph.
#[derive(Debug, Default)]
pub(crate) struct Visited {
    marks: Vec<u32>,
    stamp: u32,
}

impl Visited {
    pub fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.marks.fill(0);
            self.stamp = 1;
        }
    }

    /// Marks `v`; true if it was not marked before.
    pub fn insert(&mut self, v: u32) -> bool {
        let slot = &mut self.marks[v as usize];
        let fresh = *slot != self.stamp;
        *slot = self.stamp;
        fresh
    }
}

/// Single-path best-first search bounded by `ef`, restricted to vertices for
/// which `admit` holds. Returns the results ascending by `(distance, id)`.
pub(crate) fn best_first(
    graph: &GemGraph,
    entries: &[u32],
    ef: usize,
    visited: &mut Visited,
    admit: impl Fn(u32) -> bool,
    mut dist: impl FnMut(u32) -> f64,
) -> Vec<Scored> {
    visited.reset(graph.len());
    let mut frontier: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
    let mut best: BinaryHeap<Scored> = BinaryHeap::new();
    for &e in entries {
        if admit(e) && visited.insert(e) {
            let s = Scored(dist(e), e);
            frontier.push(Reverse(s));
            best.push(s);
        }
    }
    while best.len() > ef {
        best.pop();
    }
    while let Some(Reverse(s)) = frontier.pop() {
        if best.len() >= ef && s > *best.peek().expect("non-empty") {
            break;
        }
        for e in graph.neighbors(s.1) {
            let n = e.to;
            if !admit(n) || !visited.insert(n) {
                continue;
            }
            let c = Scored(dist(n), n);
            if best.len() < ef || c < *best.peek().expect("non-empty") {
                frontier.push(Reverse(c));
                best.push(c);
                if best.len() > ef {
                    best.pop();
                }
            }
        }
    }
    best.into_sorted_vec()
}

/// Graph construction state shared by build and insert.
pub(crate) struct Placer<'a, T> {
    pub codebook: &'a Codebook<T>,
    pub codes: &'a [CodeSet],
    pub m: usize,
    pub f: usize,
    pub ef: usize,
    cache: HashMap<(u32, u32), f64>,
    visited: Visited,
}

impl<'a, T: Scalar> Placer<'a, T> {
    pub fn new(
        codebook: &'a Codebook<T>,
        codes: &'a [CodeSet],
        m: usize,
        f: usize,
        ef: usize,
    ) -> Self {
        Self {
            codebook,
            codes,
            m,
            f,
            ef,
            cache: HashMap::new(),
            visited: Visited::default(),
        }
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    pub fn qemd(&mut self, a: u32, b: u32) -> f64 {
        let key = (a.min(b), a.max(b));
        let (codebook, codes) = (self.codebook, self.codes);
        *self.cache.entry(key).or_insert_with(|| {
            qemd_unchecked(&codes[key.0 as usize], &codes[key.1 as usize], codebook)
        })
    }

    /// The `f` qEMD-nearest vertices to `p` among `pool` (ascending ids),
    /// keeping only live ones. Small pools are scanned exhaustively;
    /// otherwise a best-first search over the pool's subgraph is run from
    /// the pool's first and last members.
    pub fn nearest_in_pool(
        &mut self,
        graph: &GemGraph,
        p: u32,
        pool: &[u32],
        in_pool: impl Fn(u32) -> bool,
    ) -> Vec<u32> {
        let mut found: Vec<Scored> = if pool.len() <= self.ef {
            let mut all: Vec<Scored> = pool
                .iter()
                .filter(|&&x| x != p && graph.is_live(x))
                .map(|&x| Scored(self.qemd(p, x), x))
                .collect();
            all.sort_unstable();
            all
        } else {
            let mut entries = vec![pool[0]];
            if let Some(&last) = pool.last() {
                if last != pool[0] {
                    entries.push(last);
                }
            }
            let mut visited = std::mem::take(&mut self.visited);
            let ef = self.ef;
            let res = best_first(
                graph,
                &entries,
                ef,
                &mut visited,
                |x| x != p && in_pool(x),
                |x| self.qemd(p, x),
            );
            self.visited = visited;
            res.into_iter().filter(|s| graph.is_live(s.1)).collect()
        };
        found.truncate(self.f);
        found.into_iter().map(|s| s.1).collect()
    }

    /// Links a vertex without regular edges to `candidates`, evicting the
    /// least similar edge of any neighbor pushed over `M`.
    pub fn connect(&mut self, graph: &mut GemGraph, p: u32, candidates: &[u32]) {
        for &n in candidates {
            if graph.link(p, n) && graph.regular_degree(n) > self.m {
                self.evict(graph, n, p);
            }
        }
    }

    /// Drops the regular edge of `x` with the largest qEMD (ties: largest
    /// id), never the edge to `protect`. Among the candidates, edges closing
    /// a triangle (so removal cannot disconnect the graph) that also leave
    /// both endpoints' cluster coverage intact are taken first, then any
    /// triangle edge, then the plain farthest edge.
    pub fn evict(&mut self, graph: &mut GemGraph, x: u32, protect: u32) {
        let mut ranked: Vec<Scored> = graph
            .regular_neighbors(x)
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|&y| y != protect)
            .map(|y| Scored(self.qemd(x, y), y))
            .collect();
        ranked.sort_unstable_by(|a, b| b.cmp(a));
        let Some(first) = ranked.first() else { return };
        let redundant = |y: u32| shares_neighbor(graph, x, y);
        let victim = ranked
            .iter()
            .find(|s| {
                redundant(s.1) && keeps_coverage(graph, x, s.1) && keeps_coverage(graph, s.1, x)
            })
            .or_else(|| ranked.iter().find(|s| redundant(s.1)))
            .unwrap_or(first)
            .1;
        graph.unlink(x, victim);
    }

    /// Merges `p`'s current regular neighbors with `candidates`, keeping at
    /// most `M` while retaining a representative of every cluster in
    /// `C_top(p)` that any candidate represents.
    pub fn update_bridges(
        &mut self,
        graph: &mut GemGraph,
        p: u32,
        candidates: &[u32],
    ) -> BridgeReport {
        let old: Vec<u32> = graph.regular_neighbors(p).collect();
        let mut all: Vec<u32> = old
            .iter()
            .chain(candidates)
            .copied()
            .filter(|&x| x != p)
            .collect();
        all.sort_unstable();
        all.dedup();

        let kept = if all.len() <= self.m {
            all.clone()
        } else {
            let mut ranked: Vec<Scored> = all.iter().map(|&x| Scored(self.qemd(p, x), x)).collect();
            ranked.sort_unstable();
            let mut keep: Vec<Scored> = ranked[..self.m].to_vec();
            let rest = &ranked[self.m..];
            let member = |x: u32, c: u32| graph.membership(x).contains(&c);
            for &c in graph.membership(p) {
                if keep.iter().any(|s| member(s.1, c)) {
                    continue;
                }
                let Some(&rep) = rest.iter().find(|s| member(s.1, c)) else {
                    continue;
                };
                // Replace the farthest kept neighbor whose loss uncovers no
                // other cluster of C_top(p).
                let covered_without = |skip: usize| -> bool {
                    graph.membership(p).iter().all(|&c2| {
                        let before = keep.iter().any(|s| member(s.1, c2)) || member(rep.1, c2);
                        let after = keep
                            .iter()
                            .enumerate()
                            .any(|(i, s)| i != skip && member(s.1, c2))
                            || member(rep.1, c2);
                        !before || after
                    })
                };
                if let Some(slot) = (0..keep.len()).rev().find(|&i| covered_without(i)) {
                    keep[slot] = rep;
                    keep.sort_unstable();
                }
            }
            let mut ids: Vec<u32> = keep.into_iter().map(|s| s.1).collect();
            ids.sort_unstable();
            ids
        };

        for &x in &old {
            if kept.binary_search(&x).is_err() {
                graph.unlink(p, x);
            }
        }
        for &x in &kept {
            if graph.link(p, x) && graph.regular_degree(x) > self.m {
                self.evict(graph, x, p);
            }
        }
        BridgeReport {
            vertex: p,
            candidates: all,
            kept,
        }
    }

    /// Places one vertex in a cluster: connect if it has no regular edges yet,
    /// otherwise merge as a bridge.
    pub fn place(
        &mut self,
        graph: &mut GemGraph,
        p: u32,
        candidates: &[u32],
    ) -> Option<BridgeReport> {
        if graph.regular_degree(p) == 0 {
            self.connect(graph, p, candidates);
            None
        } else {
            Some(self.update_bridges(graph, p, candidates))
        }
    }
}

/// True when the regular edge `a - b` lies on a triangle of regular edges.
pub(crate) fn shares_neighbor(graph: &GemGraph, a: u32, b: u32) -> bool {
    graph
        .regular_neighbors(a)
        .any(|z| z != b && graph.regular_neighbors(z).any(|w| w == b))
}

/// True when `a` keeps a representative of every cluster in `C_top(a)`
/// after losing neighbor `b`.
fn keeps_coverage(graph: &GemGraph, a: u32, b: u32) -> bool {
    graph
        .membership(a)
        .iter()
        .filter(|c| graph.membership(b).contains(c))
        .all(|c| {
            graph
                .regular_neighbors(a)
                .any(|z| z != b && graph.membership(z).contains(c))
        })
}
