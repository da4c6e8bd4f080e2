//! Minimum-norm selection among the `lambda = 0` minimizers.
//!
//! All minimizers share `W = x 1^T + B` and differ by per-course shifts:
//! `(x + u, B - u 1^T)`. The shift must keep `B - u 1^T` ordered, which only
//! constrains pairs of elements in different courses: `u_j - u_i <= c_ij`
//! where `c_ij` is the smallest `b_f - b_e` over ordered pairs `e <= f` with
//! `e` in course `i` and `f` in course `j`. Minimizing `||B - u 1^T||^2` is a
//! weighted least-squares problem in `u` solved by a primal active-set
//! method.

use nalgebra::{DMatrix, DVector};

use crate::poset::{tree_topological, PartialOrder, Structure};

/// `c[i][j]` as above, `+inf` where no cross pair exists. Values are clamped
/// at zero so that `u = 0` stays feasible despite rounding in `b`.
pub(crate) fn cross_course_slack(order: &PartialOrder, b: &[f64], course_of: &[usize], d: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![f64::INFINITY; d]; d];
    let mut relax = |i: usize, j: usize, v: f64| {
        if i != j && v < c[i][j] {
            c[i][j] = v;
        }
    };
    match order.structure() {
        Structure::Group { group_of, groups } => {
            let r = *groups;
            let mut hi = vec![vec![f64::NEG_INFINITY; r]; d];
            let mut lo = vec![vec![f64::INFINITY; r]; d];
            for (e, &g) in group_of.iter().enumerate() {
                let i = course_of[e];
                hi[i][g] = hi[i][g].max(b[e]);
                lo[i][g] = lo[i][g].min(b[e]);
            }
            for i in 0..d {
                let mut below = f64::NEG_INFINITY;
                for g in 0..r {
                    if below.is_finite() {
                        for j in 0..d {
                            if lo[j][g].is_finite() {
                                relax(i, j, lo[j][g] - below);
                            }
                        }
                    }
                    below = below.max(hi[i][g]);
                }
            }
        }
        Structure::Total { .. } => {
            let mut run = vec![f64::NEG_INFINITY; d];
            for e in order.chain().expect("total ordering") {
                let j = course_of[e];
                for (i, &m) in run.iter().enumerate() {
                    if m.is_finite() {
                        relax(i, j, b[e] - m);
                    }
                }
                run[j] = run[j].max(b[e]);
            }
        }
        Structure::Tree { node_of, parent } => {
            let nodes = parent.len();
            let mut own = vec![vec![f64::NEG_INFINITY; d]; nodes];
            let mut members = vec![Vec::new(); nodes];
            for (e, &nd) in node_of.iter().enumerate() {
                own[nd][course_of[e]] = own[nd][course_of[e]].max(b[e]);
                members[nd].push(e);
            }
            let mut above = vec![vec![f64::NEG_INFINITY; d]; nodes];
            for v in tree_topological(parent) {
                if let Some(p) = parent[v] {
                    let merged: Vec<f64> = above[p].iter().zip(&own[p]).map(|(a, o)| a.max(*o)).collect();
                    above[v] = merged;
                }
                for &e in &members[v] {
                    for (i, &m) in above[v].iter().enumerate() {
                        if m.is_finite() {
                            relax(i, course_of[e], b[e] - m);
                        }
                    }
                }
            }
        }
        Structure::Dag { succ, topo } => {
            let n = succ.len();
            let mut above = vec![vec![f64::NEG_INFINITY; d]; n];
            for &e in topo {
                for (i, &m) in above[e].iter().enumerate() {
                    if m.is_finite() {
                        relax(i, course_of[e], b[e] - m);
                    }
                }
                let mut carry = above[e].clone();
                carry[course_of[e]] = carry[course_of[e]].max(b[e]);
                for &f in &succ[e] {
                    for (a, &cv) in above[f].iter_mut().zip(&carry) {
                        *a = a.max(cv);
                    }
                }
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
    }
    c
}

/// Minimize `sum_i n_i (u_i - m_i)^2` subject to `u_j - u_i <= c[i][j]`.
/// Requires `c >= 0` so that `u = 0` is a feasible start.
pub(crate) fn min_norm_shift(sizes: &[usize], means: &[f64], c: &[Vec<f64>]) -> Vec<f64> {
    let d = sizes.len();
    let cons: Vec<(usize, usize, f64)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && c[i][j].is_finite())
        .map(|(i, j)| (i, j, c[i][j]))
        .collect();
    let h: Vec<f64> = sizes.iter().map(|&n| 2.0 * n as f64).collect();
    let scale = 1.0 + means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let tol = 1e-13 * scale;

    let mut u = vec![0.0; d];
    let mut working: Vec<usize> = Vec::new();
    let max_iter = 50 * (cons.len() + d) + 100;
    for _ in 0..max_iter {
        let q: Vec<f64> = (0..d).map(|i| h[i] * (u[i] - means[i])).collect();
        let (p, mult) = equality_step(&h, &q, &cons, &working);
        if inf_norm(&p) <= tol {
            // Drop the most negative multiplier, or stop at a KKT point.
            let worst = mult
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .filter(|(_, &m)| m < -1e-10 * scale * h.iter().fold(0.0f64, |a, &v| a.max(v)));
            match worst {
                Some((k, _)) => {
                    working.remove(k);
                }
                None => break,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, &(i, j, ck)) in cons.iter().enumerate() {
            if working.contains(&k) {
                continue;
            }
            let ap = p[j] - p[i];
            if ap > 1e-15 * scale {
                let room = (ck - (u[j] - u[i])).max(0.0);
                let t = room / ap;
                if t < alpha {
                    alpha = t;
                    blocking = Some(k);
                }
            }
        }
        for (ui, pi) in u.iter_mut().zip(&p) {
            *ui += alpha * pi;
        }
        if let Some(k) = blocking {
            working.push(k);
        }
    }
    u
}

/// Step `p` minimizing the quadratic model with the working constraints held
/// as equalities, and their multipliers.
fn equality_step(h: &[f64], q: &[f64], cons: &[(usize, usize, f64)], working: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = h.len();
    if working.is_empty() {
        return ((0..d).map(|i| -q[i] / h[i]).collect(), Vec::new());
    }
    let w = working.len();
    let mut a = DMatrix::<f64>::zeros(w, d);
    for (r, &k) in working.iter().enumerate() {
        let (i, j, _) = cons[k];
        a[(r, j)] = 1.0;
        a[(r, i)] = -1.0;
    }
    let hinv = DVector::from_iterator(d, h.iter().map(|v| 1.0 / v));
    let qv = DVector::from_column_slice(q);
    let a_hinv = DMatrix::from_fn(w, d, |r, c| a[(r, c)] * hinv[c]);
    let s = &a_hinv * a.transpose();
    let rhs = -(&a_hinv * &qv);
    let mu = s
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(w));
    let full = &qv + a.transpose() * &mu;
    let p: Vec<f64> = (0..d).map(|i| -full[i] * hinv[i]).collect();
    (p, mu.iter().copied().collect())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_shift_hits_means() {
        let inf = f64::INFINITY;
        let u = min_norm_shift(&[2, 3], &[1.0, -2.0], &[vec![inf, inf], vec![inf, inf]]);
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn binding_constraint() {
        // u_1 - u_0 <= 0 with targets (-1, 1): the optimum pools to 0.
        let inf = f64::INFINITY;
        let u = min_norm_shift(&[1, 1], &[-1.0, 1.0], &[vec![inf, 0.0], vec![inf, inf]]);
        assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12, "{u:?}");
        // Weighted: sizes (3, 1) pool to the weighted mean -0.5.
        let u = min_norm_shift(&[3, 1], &[-1.0, 1.0], &[vec![inf, 0.0], vec![inf, inf]]);
        assert!((u[0] + 0.5).abs() < 1e-12 && (u[1] + 0.5).abs() < 1e-12, "{u:?}");
    }

    #[test]
    fn cycle_of_constraints() {
        // Three courses with a cyclic set of slack-0 constraints force all
        // shifts equal; the optimum is the weighted mean of the targets.
        let inf = f64::INFINITY;
        let c = vec![vec![inf, 0.0, inf], vec![inf, inf, 0.0], vec![0.0, inf, inf]];
        let u = min_norm_shift(&[1, 2, 1], &[3.0, 0.0, -1.0], &c);
        for v in &u {
            assert!((v - 0.5).abs() < 1e-10, "{u:?}");
        }
    }
}
