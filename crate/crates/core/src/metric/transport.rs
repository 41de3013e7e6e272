//! Exact optimal transport between uniform-mass vector sets.
//!
//! Masses `1/m1` and `1/m2` are scaled by `L = lcm(m1, m2)` to integers and
//! the resulting transportation problem is solved as a min-cost flow with
//! successive shortest augmenting paths (Dijkstra over reduced costs).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{SimilarityKind, VectorSet};

/// An optimal plan: sparse flows `(i, j, t_ij)` and its total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self, rows: usize) -> Vec<f64> {
        let mut sums = vec![0.0; rows];
        for &(i, _, t) in &self.flows {
            sums[i] += t;
        }
        sums
    }

    pub fn col_sums(&self, cols: usize) -> Vec<f64> {
        let mut sums = vec![0.0; cols];
        for &(_, j, t) in &self.flows {
            sums[j] += t;
        }
        sums
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Integer flows of an optimal plan and the unscaled cost `sum flow * c`.
pub(crate) struct IntegerPlan {
    pub flows: Vec<(usize, usize, u64)>,
    pub scaled_cost: f64,
}

/// Solves `min sum f_ij c_ij` subject to row sums `supply` and column sums
/// `demand`. `cost` is row-major `supply.len() x demand.len()` and must be
/// non-negative.
pub(crate) fn solve(supply: &[u64], demand: &[u64], cost: &[f64]) -> Result<IntegerPlan> {
    let n1 = supply.len();
    let n2 = demand.len();
    debug_assert_eq!(cost.len(), n1 * n2);
    let total: u64 = supply.iter().sum();
    if total != demand.iter().sum::<u64>() {
        return Err(Error::SolverFailure(
            "supply and demand totals differ".into(),
        ));
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::SolverFailure(
            "costs must be finite and non-negative".into(),
        ));
    }

    // Trivial shapes need no search.
    if n1 == 1 || n2 == 1 {
        let mut flows = Vec::with_capacity(n1.max(n2));
        let mut scaled_cost = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                let f = if n1 == 1 { demand[j] } else { supply[i] };
                if f > 0 {
                    flows.push((i, j, f));
                    scaled_cost += f as f64 * cost[i * n2 + j];
                }
            }
        }
        return Ok(IntegerPlan { flows, scaled_cost });
    }

    // Node layout: 0 source, 1..=n1 rows, n1+1..=n1+n2 columns, n1+n2+1 sink.
    let nodes = n1 + n2 + 2;
    let sink = nodes - 1;
    let row = |i: usize| 1 + i;
    let col = |j: usize| 1 + n1 + j;

    let mut rem_supply = supply.to_vec();
    let mut rem_demand = demand.to_vec();
    let mut flow = vec![0u64; n1 * n2];
    let mut potential = vec![0.0f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let mut shipped = 0u64;

    while shipped < total {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[0] = 0.0;

        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let du = dist[u];
            let relax = |v: usize, c: f64, dist: &mut [f64], prev: &mut [usize]| {
                let reduced = (c + potential[u] - potential[v]).max(0.0);
                let nd = du + reduced;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            };
            if u == 0 {
                for (i, &s) in rem_supply.iter().enumerate() {
                    if s > 0 {
                        relax(row(i), 0.0, &mut dist, &mut prev);
                    }
                }
            } else if u <= n1 {
                let i = u - 1;
                for j in 0..n2 {
                    relax(col(j), cost[i * n2 + j], &mut dist, &mut prev);
                }
            } else if u < sink {
                let j = u - 1 - n1;
                for i in 0..n1 {
                    if flow[i * n2 + j] > 0 {
                        relax(row(i), -cost[i * n2 + j], &mut dist, &mut prev);
                    }
                }
                if rem_demand[j] > 0 {
                    relax(sink, 0.0, &mut dist, &mut prev);
                }
            } else {
                for j in 0..n2 {
                    if rem_demand[j] < demand[j] {
                        relax(col(j), 0.0, &mut dist, &mut prev);
                    }
                }
            }
        }

        if !dist[sink].is_finite() {
            return Err(Error::SolverFailure(
                "no augmenting path with demand remaining".into(),
            ));
        }
        let d_sink = dist[sink];
        for v in 0..nodes {
            potential[v] += dist[v].min(d_sink);
        }

        // Bottleneck along the path.
        let mut push = total - shipped;
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            if u == 0 {
                push = push.min(rem_supply[v - 1]);
            } else if v == sink {
                push = push.min(rem_demand[u - 1 - n1]);
            } else if u > n1 && v <= n1 {
                push = push.min(flow[(v - 1) * n2 + (u - 1 - n1)]);
            }
            v = u;
        }
        if push == 0 {
            return Err(Error::SolverFailure("zero-capacity augmenting path".into()));
        }

        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            if u == 0 {
                rem_supply[v - 1] -= push;
            } else if v == sink {
                rem_demand[u - 1 - n1] -= push;
            } else if u <= n1 {
                flow[(u - 1) * n2 + (v - 1 - n1)] += push;
            } else {
                flow[(v - 1) * n2 + (u - 1 - n1)] -= push;
            }
            v = u;
        }
        shipped += push;
    }

    let mut flows = Vec::new();
    let mut scaled_cost = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let f = flow[i * n2 + j];
            if f > 0 {
                flows.push((i, j, f));
                scaled_cost += f as f64 * cost[i * n2 + j];
            }
        }
    }
    Ok(IntegerPlan { flows, scaled_cost })
}

/// Earth mover's distance between two sets with uniform masses `1/m1` and
/// `1/m2` under the ground distance `d_X` of `kind`.
pub fn emd<T: Scalar>(
    a: &VectorSet<T>,
    b: &VectorSet<T>,
    kind: SimilarityKind,
) -> Result<TransportPlan> {
    b.check_dim(a.dim())?;
    let (m1, m2) = (a.len(), b.len());
    let scale = lcm(m1 as u64, m2 as u64);
    let supply = vec![scale / m1 as u64; m1];
    let demand = vec![scale / m2 as u64; m2];
    let mut cost = Vec::with_capacity(m1 * m2);
    for x in a.vectors() {
        for y in b.vectors() {
            cost.push(kind.distance(x, y));
        }
    }
    let plan = solve(&supply, &demand, &cost)?;
    let l = scale as f64;
    Ok(TransportPlan {
        flows: plan
            .flows
            .into_iter()
            .map(|(i, j, f)| (i, j, f as f64 / l))
            .collect(),
        cost: plan.scaled_cost / l,
    })
}
