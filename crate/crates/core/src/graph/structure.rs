//! The set-level proximity graph shared by every coarse cluster.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::types::SetId;

/// One adjacency entry. Regular edges are stored on both endpoints;
/// shortcuts are stored on both endpoints as well but carry the flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub to: u32,
    pub shortcut: bool,
}

/// Adjacency lists, tombstones, per-vertex `C_top` and per-cluster member
/// lists. Every set is a single vertex no matter how many clusters it
/// belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GemGraph {
    adjacency: Vec<Vec<Edge>>,
    tombstones: Vec<bool>,
    degree_cap: usize,
    shortcut_cap: usize,
    membership: Vec<Vec<u32>>,
    entry_candidates: Vec<Vec<u32>>,
}

impl GemGraph {
    pub fn new(n_clusters: usize, degree_cap: usize, shortcut_cap: usize) -> Self {
        Self {
            adjacency: Vec::new(),
            tombstones: Vec::new(),
            degree_cap,
            shortcut_cap,
            membership: Vec::new(),
            entry_candidates: vec![Vec::new(); n_clusters],
        }
    }

    pub(crate) fn from_parts(
        adjacency: Vec<Vec<Edge>>,
        tombstones: Vec<bool>,
        degree_cap: usize,
        shortcut_cap: usize,
        membership: Vec<Vec<u32>>,
        entry_candidates: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let g = Self {
            adjacency,
            tombstones,
            degree_cap,
            shortcut_cap,
            membership,
            entry_candidates,
        };
        let n = g.adjacency.len();
        if g.tombstones.len() != n || g.membership.len() != n {
            return Err(Error::Malformed("graph section lengths disagree".into()));
        }
        let k2 = g.entry_candidates.len() as u32;
        let bad_cluster = g.membership.iter().flatten().any(|&c| c >= k2);
        let bad_member = g
            .entry_candidates
            .iter()
            .flatten()
            .any(|&v| v as usize >= n);
        if bad_cluster || bad_member {
            return Err(Error::Malformed(
                "graph references unknown cluster or vertex".into(),
            ));
        }
        g.check_invariants(degree_cap).map_err(Error::Malformed)?;
        Ok(g)
    }

    /// Number of vertices, live or tombstoned.
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn live_count(&self) -> usize {
        self.tombstones.iter().filter(|&&t| !t).count()
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn shortcut_cap(&self) -> usize {
        self.shortcut_cap
    }

    pub fn n_clusters(&self) -> usize {
        self.entry_candidates.len()
    }

    pub fn is_live(&self, v: u32) -> bool {
        !self.tombstones[v as usize]
    }

    pub fn tombstones(&self) -> &[bool] {
        &self.tombstones
    }

    pub fn neighbors(&self, v: u32) -> &[Edge] {
        &self.adjacency[v as usize]
    }

    pub fn regular_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adjacency[v as usize]
            .iter()
            .filter(|e| !e.shortcut)
            .map(|e| e.to)
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn regular_degree(&self, v: u32) -> usize {
        self.adjacency[v as usize]
            .iter()
            .filter(|e| !e.shortcut)
            .count()
    }

    pub fn shortcut_degree(&self, v: u32) -> usize {
        self.adjacency[v as usize]
            .iter()
            .filter(|e| e.shortcut)
            .count()
    }

    /// `C_top` of a vertex, ascending.
    pub fn membership(&self, v: u32) -> &[u32] {
        &self.membership[v as usize]
    }

    /// Member vertices of a coarse cluster, ascending.
    pub fn members(&self, cluster: u32) -> &[u32] {
        &self.entry_candidates[cluster as usize]
    }

    pub fn adjacent(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].iter().any(|e| e.to == v)
    }

    /// Undirected edge count (each regular or shortcut pair once).
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn shortcut_count(&self) -> usize {
        self.adjacency
            .iter()
            .flatten()
            .filter(|e| e.shortcut)
            .count()
            / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.len() as f64
    }

    pub fn mean_membership(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.membership.iter().map(Vec::len).sum::<usize>() as f64 / self.len() as f64
    }

    /// Appends a vertex with the given `C_top` and registers it as a member
    /// of each of those clusters.
    pub(crate) fn add_vertex(&mut self, c_top: Vec<u32>) -> u32 {
        let v = self.adjacency.len() as u32;
        for &c in &c_top {
            let list = &mut self.entry_candidates[c as usize];
            let at = list.partition_point(|&x| x < v);
            list.insert(at, v);
        }
        self.adjacency.push(Vec::new());
        self.tombstones.push(false);
        self.membership.push(c_top);
        v
    }

    pub(crate) fn tombstone(&mut self, id: SetId) -> Result<()> {
        match self.tombstones.get_mut(id as usize) {
            Some(t) if !*t => {
                *t = true;
                Ok(())
            }
            _ => Err(Error::UnknownDocId(id)),
        }
    }

    /// Adds the regular edge `u - v` in both directions. Returns false when
    /// the two are already adjacent.
    pub(crate) fn link(&mut self, u: u32, v: u32) -> bool {
        if u == v || self.adjacent(u, v) {
            return false;
        }
        self.adjacency[u as usize].push(Edge {
            to: v,
            shortcut: false,
        });
        self.adjacency[v as usize].push(Edge {
            to: u,
            shortcut: false,
        });
        true
    }

    /// Removes the regular edge `u - v` from both endpoints.
    pub(crate) fn unlink(&mut self, u: u32, v: u32) {
        self.adjacency[u as usize].retain(|e| e.shortcut || e.to != v);
        self.adjacency[v as usize].retain(|e| e.shortcut || e.to != u);
    }

    /// Adds a shortcut when both endpoints still have capacity: total degree
    /// at most `M`, fewer than `S_max` shortcuts, and not yet adjacent.
    pub(crate) fn add_shortcut(&mut self, u: u32, v: u32) -> bool {
        let has_room =
            |g: &Self, x: u32| g.degree(x) <= g.degree_cap && g.shortcut_degree(x) < g.shortcut_cap;
        if u == v || self.adjacent(u, v) || !has_room(self, u) || !has_room(self, v) {
            return false;
        }
        self.adjacency[u as usize].push(Edge {
            to: v,
            shortcut: true,
        });
        self.adjacency[v as usize].push(Edge {
            to: u,
            shortcut: true,
        });
        true
    }

    /// Symmetry of every edge, no self loops or duplicates, regular degree
    /// at most `regular_bound` and shortcut degree at most `S_max`.
    pub fn check_invariants(&self, regular_bound: usize) -> std::result::Result<(), String> {
        let n = self.len() as u32;
        for (u, edges) in self.adjacency.iter().enumerate() {
            let u = u as u32;
            let mut seen: Vec<u32> = edges.iter().map(|e| e.to).collect();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("vertex {u} has a duplicate neighbor"));
            }
            for e in edges {
                if e.to >= n || e.to == u {
                    return Err(format!("vertex {u} has invalid neighbor {}", e.to));
                }
                let back = self.adjacency[e.to as usize]
                    .iter()
                    .any(|b| b.to == u && b.shortcut == e.shortcut);
                if !back {
                    return Err(format!("edge {u} -> {} has no reverse", e.to));
                }
            }
            if self.regular_degree(u) > regular_bound {
                return Err(format!(
                    "vertex {u} has regular degree {}",
                    self.regular_degree(u)
                ));
            }
            if self.shortcut_degree(u) > self.shortcut_cap {
                return Err(format!(
                    "vertex {u} has {} shortcuts",
                    self.shortcut_degree(u)
                ));
            }
        }
        Ok(())
    }

    /// Unweighted hop distance ignoring edge kinds; `None` if unreachable.
    pub fn hop_distance(&self, from: u32, to: u32) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::from([from]);
        dist[from as usize] = 0;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return Some(dist[u as usize]);
            }
            for e in &self.adjacency[u as usize] {
                if dist[e.to as usize] == usize::MAX {
                    dist[e.to as usize] = dist[u as usize] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        None
    }

    /// Same as [`hop_distance`](Self::hop_distance) but over regular edges only.
    pub fn regular_hop_distance(&self, from: u32, to: u32) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::from([from]);
        dist[from as usize] = 0;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return Some(dist[u as usize]);
            }
            for v in self.regular_neighbors(u) {
                if dist[v as usize] == usize::MAX {
                    dist[v as usize] = dist[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize) -> GemGraph {
        let mut g = GemGraph::new(2, 2, 1);
        for i in 0..n {
            g.add_vertex(vec![(i % 2) as u32]);
        }
        g
    }

    #[test]
    fn link_is_symmetric_and_idempotent() {
        let mut g = graph(3);
        assert!(g.link(0, 1));
        assert!(!g.link(1, 0));
        assert!(g.adjacent(1, 0));
        assert_eq!(g.edge_count(), 1);
        g.unlink(1, 0);
        assert_eq!(g.edge_count(), 0);
        assert!(g.check_invariants(2).is_ok());
    }

    #[test]
    fn shortcut_guard() {
        let mut g = graph(4);
        g.link(0, 1);
        assert!(!g.add_shortcut(0, 1), "already adjacent");
        assert!(g.add_shortcut(0, 2));
        assert!(!g.add_shortcut(0, 3), "shortcut cap of one reached");
        assert_eq!(g.shortcut_count(), 1);
        assert_eq!(g.regular_degree(0), 1);
        assert_eq!(g.degree(0), 2);
        g.unlink(0, 2);
        assert!(g.adjacent(0, 2), "unlink leaves shortcuts alone");
    }

    #[test]
    fn members_stay_sorted() {
        let g = graph(5);
        assert_eq!(g.members(0), &[0, 2, 4]);
        assert_eq!(g.members(1), &[1, 3]);
    }

    #[test]
    fn tombstone_twice_fails() {
        let mut g = graph(2);
        g.tombstone(1).unwrap();
        assert!(matches!(g.tombstone(1), Err(Error::UnknownDocId(1))));
        assert!(matches!(g.tombstone(9), Err(Error::UnknownDocId(9))));
        assert_eq!(g.live_count(), 1);
    }

    #[test]
    fn hop_distances() {
        let mut g = graph(4);
        g.link(0, 1);
        g.link(1, 2);
        assert_eq!(g.hop_distance(0, 2), Some(2));
        assert_eq!(g.hop_distance(0, 3), None);
        g.add_shortcut(0, 2);
        assert_eq!(g.hop_distance(0, 2), Some(1));
        assert_eq!(g.regular_hop_distance(0, 2), Some(2));
    }

    #[test]
    fn invariant_checker_catches_asymmetry() {
        let mut g = graph(3);
        g.adjacency[0].push(Edge {
            to: 2,
            shortcut: false,
        });
        assert!(g.check_invariants(5).is_err());
    }
}
