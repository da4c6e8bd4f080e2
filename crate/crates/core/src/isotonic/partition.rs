//! Isotonic projection on an arbitrary DAG by recursive partitioning.
//!
//! A set is split at its weighted mean `m` into the upper set `U` maximizing
//! `sum_{e in U} w_e (v_e - m)`; that set is found as a maximum-weight
//! closure via min-cut. If no upper set has positive gain, the whole set is
//! one level set at `m`. Both halves are convex subsets, so recursion only
//! needs the induced edges.

use std::collections::VecDeque;

struct FlowEdge {
    to: usize,
    cap: f64,
}

/// Dinic max-flow on f64 capacities.
struct Network {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
    eps: f64,
}

impl Network {
    fn new(n: usize, eps: f64) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            iter: vec![0; n],
            eps,
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, cap: f64) {
        self.adj[a].push(self.edges.len());
        self.edges.push(FlowEdge { to: b, cap });
        self.adj[b].push(self.edges.len());
        self.edges.push(FlowEdge { to: a, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &id in &self.adj[u] {
                let e = &self.edges[id];
                if e.cap > self.eps && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[u] + 1;
                    q.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: f64) -> f64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.adj[u].len() {
            let id = self.adj[u][self.iter[u]];
            let (to, cap) = (self.edges[id].to, self.edges[id].cap);
            if cap > self.eps && self.level[u] < self.level[to] {
                let pushed = self.dfs(to, t, f.min(cap));
                if pushed > 0.0 {
                    self.edges[id].cap -= pushed;
                    self.edges[id ^ 1].cap += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) {
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            while self.dfs(s, t, f64::INFINITY) > 0.0 {}
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &id in &self.adj[u] {
                let e = &self.edges[id];
                if e.cap > self.eps && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

/// Weighted isotonic projection onto `{u : u_a <= u_b for every edge a -> b}`.
/// Returns fitted values and a level-set label per element (the smallest
/// element index of its block).
pub(crate) fn project_dag(values: &[f64], weights: &[f64], succ: &[Vec<usize>]) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    let mut fitted = vec![0.0; n];
    let mut label = vec![0; n];
    let mut local = vec![usize::MAX; n];
    let mut pending: Vec<Vec<usize>> = vec![(0..n).collect()];

    while let Some(set) = pending.pop() {
        let wsum: f64 = set.iter().map(|&i| weights[i]).sum();
        let m = set.iter().map(|&i| weights[i] * values[i]).sum::<f64>() / wsum;
        let gains: Vec<f64> = set.iter().map(|&i| weights[i] * (values[i] - m)).collect();
        let scale: f64 = gains.iter().map(|g| g.abs()).sum();

        let upper = if set.len() > 1 && scale > 0.0 {
            best_upper_set(&set, &gains, succ, &mut local, scale)
        } else {
            None
        };
        match upper {
            Some(in_upper) => {
                let (hi, lo): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&i| in_upper[local[i]]);
                for &i in &set {
                    local[i] = usize::MAX;
                }
                pending.push(lo);
                pending.push(hi);
            }
            None => {
                let first = *set.iter().min().expect("non-empty");
                for &i in &set {
                    fitted[i] = m;
                    label[i] = first;
                    local[i] = usize::MAX;
                }
            }
        }
    }
    (fitted, label)
}

/// Upper set of `set` with the largest total gain, if that gain is
/// meaningfully positive. Leaves `local` filled for the members of `set`.
fn best_upper_set(set: &[usize], gains: &[f64], succ: &[Vec<usize>], local: &mut [usize], scale: f64) -> Option<Vec<bool>> {
    for (k, &i) in set.iter().enumerate() {
        local[i] = k;
    }
    let k = set.len();
    let (s, t) = (k, k + 1);
    let mut net = Network::new(k + 2, 1e-14 * scale);
    let mut has_edge = false;
    for (a, &i) in set.iter().enumerate() {
        let g = gains[a];
        if g > 0.0 {
            net.add_edge(s, a, g);
        } else if g < 0.0 {
            net.add_edge(a, t, -g);
        }
        for &j in &succ[i] {
            if local[j] != usize::MAX {
                net.add_edge(a, local[j], f64::INFINITY);
                has_edge = true;
            }
        }
    }
    let in_upper: Vec<bool> = if has_edge {
        net.max_flow(s, t);
        let side = net.source_side(s);
        side[..k].to_vec()
    } else {
        gains.iter().map(|&g| g > 0.0).collect()
    };
    let gain: f64 = gains.iter().zip(&in_upper).filter(|(_, &u)| u).map(|(g, _)| g).sum();
    let size = in_upper.iter().filter(|&&u| u).count();
    (gain > 1e-12 * scale && size > 0 && size < k).then_some(in_upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_matches_midpoint() {
        let (f, l) = project_dag(&[2.0, 0.0], &[1.0, 1.0], &[vec![1], vec![]]);
        assert_eq!(f, vec![1.0, 1.0]);
        assert_eq!(l, vec![0, 0]);
    }

    #[test]
    fn unconstrained_is_identity() {
        let v = [3.0, -1.0, 2.0];
        let (f, l) = project_dag(&v, &[1.0; 3], &[vec![], vec![], vec![]]);
        assert_eq!(f, v.to_vec());
        assert_eq!(l, vec![0, 1, 2]);
    }

    #[test]
    fn diamond() {
        // 0 -> {1, 2} -> 3
        let succ = vec![vec![1, 2], vec![3], vec![3], vec![]];
        let (f, _) = project_dag(&[0.0, 3.0, 1.0, 2.0], &[1.0; 4], &succ);
        // Only the 1 -> 3 edge is violated; that pair pools to 2.5.
        let want = [0.0, 2.5, 1.0, 2.5];
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{f:?}");
        }
    }
}
