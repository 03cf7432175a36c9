//! Exact discrete optimal transport.
//!
//! [`transport_cost`] solves the balanced transportation problem with a
//! primal network simplex on the bipartite graph plus an artificial root.
//! The basis is kept strongly feasible (zero-flow tree arcs always point
//! towards the root) which rules out cycling under degenerate pivots.

use crate::error::{invalid, shape, Result};

/// Flow values below this multiple of the total mass are treated as zero.
const FLOW_EPS: f64 = 1e-14;
/// Reduced costs above `-COST_EPS * max_cost` count as nonnegative.
const COST_EPS: f64 = 1e-13;

struct Arc {
    tail: usize,
    head: usize,
    cost: f64,
}

/// Network simplex state. Node `i < m` is a source, `m + j` a sink and
/// `m + n` the root. Arc `i * n + j` joins source `i` to sink `j`; arc
/// `m * n + v` is the artificial arc between node `v` and the root.
struct Simplex {
    arcs: Vec<Arc>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    tree: Vec<usize>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    root: usize,
    real: usize,
}

impl Simplex {
    fn new(a: &[f64], b: &[f64], cost: &[f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let nodes = m + n + 1;
        let root = m + n;
        let max_cost = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let big = 1.0 + nodes as f64 * max_cost.max(1.0);
        let mut arcs = Vec::with_capacity(m * n + m + n);
        for i in 0..m {
            for j in 0..n {
                arcs.push(Arc {
                    tail: i,
                    head: m + j,
                    cost: cost[i * n + j],
                });
            }
        }
        let mut flow = vec![0.0; m * n];
        for (i, &w) in a.iter().enumerate() {
            arcs.push(Arc {
                tail: i,
                head: root,
                cost: big,
            });
            flow.push(w);
        }
        for (j, &w) in b.iter().enumerate() {
            if w > 0.0 {
                arcs.push(Arc {
                    tail: root,
                    head: m + j,
                    cost: big,
                });
            } else {
                arcs.push(Arc {
                    tail: m + j,
                    head: root,
                    cost: big,
                });
            }
            flow.push(w);
        }
        let real = m * n;
        let mut in_tree = vec![false; arcs.len()];
        let tree: Vec<usize> = (real..arcs.len()).collect();
        for &e in &tree {
            in_tree[e] = true;
        }
        let mut s = Self {
            arcs,
            flow,
            in_tree,
            tree,
            adj: vec![Vec::new(); nodes],
            parent: vec![usize::MAX; nodes],
            parent_arc: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
            root,
            real,
        };
        s.rebuild();
        s
    }

    /// Recomputes parents, depths and potentials from the tree arc list.
    fn rebuild(&mut self) {
        for list in &mut self.adj {
            list.clear();
        }
        for &e in &self.tree {
            let arc = &self.arcs[e];
            self.adj[arc.tail].push(e);
            self.adj[arc.head].push(e);
        }
        let root = self.root;
        self.parent[root] = usize::MAX;
        self.parent_arc[root] = usize::MAX;
        self.depth[root] = 0;
        self.pi[root] = 0.0;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for idx in 0..self.adj[u].len() {
                let e = self.adj[u][idx];
                if e == self.parent_arc[u] {
                    continue;
                }
                let arc = &self.arcs[e];
                let w = if arc.tail == u { arc.head } else { arc.tail };
                self.parent[w] = u;
                self.parent_arc[w] = e;
                self.depth[w] = self.depth[u] + 1;
                self.pi[w] = if arc.tail == u {
                    self.pi[u] - arc.cost
                } else {
                    self.pi[u] + arc.cost
                };
                stack.push(w);
            }
        }
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        let arc = &self.arcs[e];
        arc.cost - self.pi[arc.tail] + self.pi[arc.head]
    }

    /// Whether pushing flow from `child` to its parent decreases the tree arc.
    fn points_down(&self, child: usize) -> bool {
        self.arcs[self.parent_arc[child]].head == child
    }

    /// Performs one pivot on entering arc `e`.
    fn pivot(&mut self, e: usize, flow_eps: f64) {
        let (k, l) = (self.arcs[e].tail, self.arcs[e].head);
        let (mut u, mut v) = (k, l);
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        let apex = u;

        // Flow travels k -> l -> ... -> apex -> ... -> k. On the l side an arc
        // decreases when it points down; on the k side when it points up.
        let mut delta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        let mut l_side_min = f64::INFINITY;
        let mut l_leave = None;
        let mut w = l;
        while w != apex {
            if self.points_down(w) {
                let f = self.flow[self.parent_arc[w]];
                if f <= l_side_min {
                    l_side_min = f;
                    l_leave = Some(w);
                }
            }
            w = self.parent[w];
        }
        let mut k_side_min = f64::INFINITY;
        let mut k_leave = None;
        let mut w = k;
        while w != apex {
            if !self.points_down(w) {
                let f = self.flow[self.parent_arc[w]];
                if f < k_side_min {
                    k_side_min = f;
                    k_leave = Some(w);
                }
            }
            w = self.parent[w];
        }
        // Ties go to the arc met last when walking the cycle from the apex in
        // the direction of the entering arc.
        if l_leave.is_some() && l_side_min <= k_side_min {
            delta = l_side_min;
            leaving = l_leave;
        } else if k_leave.is_some() {
            delta = k_side_min;
            leaving = k_leave;
        }
        let leaving = leaving.expect("the problem is bounded");

        if delta > 0.0 {
            self.flow[e] += delta;
            let mut w = l;
            while w != apex {
                let pa = self.parent_arc[w];
                if self.points_down(w) {
                    self.flow[pa] -= delta;
                } else {
                    self.flow[pa] += delta;
                }
                if self.flow[pa].abs() < flow_eps {
                    self.flow[pa] = 0.0;
                }
                w = self.parent[w];
            }
            let mut w = k;
            while w != apex {
                let pa = self.parent_arc[w];
                if self.points_down(w) {
                    self.flow[pa] += delta;
                } else {
                    self.flow[pa] -= delta;
                }
                if self.flow[pa].abs() < flow_eps {
                    self.flow[pa] = 0.0;
                }
                w = self.parent[w];
            }
        }
        let out = self.parent_arc[leaving];
        self.flow[out] = 0.0;
        self.in_tree[out] = false;
        self.in_tree[e] = true;
        let pos = self.tree.iter().position(|&x| x == out).expect("tree arc");
        self.tree[pos] = e;
        self.rebuild();
    }

    fn solve(&mut self, max_cost: f64, flow_eps: f64) -> Result<()> {
        let eps = COST_EPS * max_cost.max(f64::MIN_POSITIVE);
        let arcs = self.real;
        let block = ((arcs as f64).sqrt().ceil() as usize).max(16).min(arcs);
        let max_pivots = 50 * (arcs + self.arcs.len()) + 1000;
        let mut next = 0;
        for _ in 0..max_pivots {
            let mut best = None;
            let mut best_rc = -eps;
            let mut scanned = 0;
            while scanned < arcs {
                let end = (scanned + block).min(arcs);
                for _ in scanned..end {
                    let e = next;
                    next = if next + 1 == arcs { 0 } else { next + 1 };
                    if self.in_tree[e] {
                        continue;
                    }
                    let rc = self.reduced_cost(e);
                    if rc < best_rc {
                        best_rc = rc;
                        best = Some(e);
                    }
                }
                scanned = end;
                if best.is_some() {
                    break;
                }
            }
            match best {
                Some(e) => self.pivot(e, flow_eps),
                None => return Ok(()),
            }
        }
        Err(invalid("network simplex exceeded its pivot limit"))
    }
}

/// Minimal cost of moving mass `a` onto mass `b` with row-major `cost`.
///
/// Both mass vectors must be nonnegative with (nearly) equal totals; entries
/// with zero mass are allowed.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &[f64]) -> Result<f64> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(shape("transport between empty measures"));
    }
    if cost.len() != m * n {
        return Err(shape(format!("cost matrix has {} entries, expected {}", cost.len(), m * n)));
    }
    if a.iter().chain(b).any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(invalid("transport masses must be nonnegative and finite"));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(invalid("transport costs must be finite"));
    }
    if m == 1 || n == 1 {
        // every plan is the product plan
        return Ok(if m == 1 {
            b.iter().zip(cost).map(|(w, c)| w * c).sum()
        } else {
            a.iter().zip(cost).map(|(w, c)| w * c).sum()
        });
    }
    let total: f64 = a.iter().sum();
    let max_cost = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let mut simplex = Simplex::new(a, b, cost);
    simplex.solve(max_cost, FLOW_EPS * total.max(1.0))?;
    Ok((0..m * n)
        .filter(|&e| simplex.flow[e] != 0.0)
        .map(|e| simplex.flow[e] * cost[e])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brute_force_permutation(cost: &[f64], n: usize) -> f64 {
        fn go(k: usize, n: usize, used: &mut Vec<bool>, acc: f64, cost: &[f64], best: &mut f64) {
            if k == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    go(k + 1, n, used, acc + cost[k * n + j], cost, best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(0, n, &mut vec![false; n], 0.0, cost, &mut best);
        best / n as f64
    }

    #[test]
    fn small_assignment_matches_enumeration() {
        let n = 6;
        let mut state = 12345u64;
        for _ in 0..50 {
            let cost: Vec<f64> = (0..n * n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 33) as f64 / (1u64 << 31) as f64
                })
                .collect();
            let w = vec![1.0 / n as f64; n];
            let got = transport_cost(&w, &w, &cost).unwrap();
            assert_abs_diff_eq!(got, brute_force_permutation(&cost, n), epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_integer_costs() {
        // many ties; uniform weights produce heavily degenerate bases
        let n = 8;
        let cost: Vec<f64> = (0..n * n).map(|e| ((e * 7) % 3) as f64).collect();
        let w = vec![1.0 / n as f64; n];
        let got = transport_cost(&w, &w, &cost).unwrap();
        assert_abs_diff_eq!(got, brute_force_permutation(&cost, n), epsilon = 1e-12);
    }

    #[test]
    fn single_row_is_product_plan() {
        let got = transport_cost(&[1.0], &[0.25, 0.75], &[2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(got, 3.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_masses_are_tolerated() {
        let got = transport_cost(&[0.5, 0.0, 0.5], &[0.0, 1.0], &[9.0, 1.0, 9.0, 9.0, 9.0, 3.0])
            .unwrap();
        assert_abs_diff_eq!(got, 2.0, epsilon = 1e-14);
    }
}
