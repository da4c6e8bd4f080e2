//! Slow, independent reference solver for small instances.
//!
//! Qualities are eliminated exactly (each is the course mean of `y - B`), and
//! the remaining convex problem in `B` is solved by projected gradient
//! descent with backtracking. Projections use Hildreth's dual coordinate
//! ascent over every implied pair, so nothing here shares code with the
//! production projection or solver. At `lambda = 0` the minimum-norm
//! representative is then found with a second Hildreth run over the course
//! shifts.

use crate::datamodel::{ObservationSet, QualityVector, RatingMatrix};
use crate::estimator::Lambda;
use crate::poset::PartialOrder;

use super::IsotonicError;

const MAX_ITERATIONS: usize = 100_000;
const STATIONARITY: f64 = 1e-10;
const HILDRETH_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: QualityVector,
    pub b: RatingMatrix,
    pub objective: f64,
    pub iterations: usize,
}

/// Reference minimizer of `||Y - x 1^T - B||^2 + lambda ||B||^2` over the
/// cells of `omega`. Meant for instances of a few dozen cells.
pub fn qp_oracle(
    y: &RatingMatrix,
    order: &PartialOrder,
    lambda: Lambda,
    omega: &ObservationSet,
) -> Result<OracleSolution, IsotonicError> {
    let yv = y.gather(omega).map_err(|e| IsotonicError::Data(e.to_string()))?;
    let course = omega.course_of_flat();
    let d = omega.courses();
    let sub = order.restrict(&omega.elements())?;
    let pairs = sub.implied_index_pairs();
    let shape = y.shape();

    let means = |v: &[f64]| -> Vec<f64> {
        let mut s = vec![0.0; d];
        let mut n = vec![0.0; d];
        for (x, &c) in v.iter().zip(&course) {
            s[c] += x;
            n[c] += 1.0;
        }
        s.iter().zip(&n).map(|(s, n)| s / n).collect()
    };

    let l = match lambda {
        Lambda::Infinity => {
            let x = means(&yv);
            let objective = yv.iter().zip(&course).map(|(y, &c)| (y - x[c]).powi(2)).sum();
            return Ok(OracleSolution {
                x: QualityVector(x),
                b: RatingMatrix::zeros(&shape),
                objective,
                iterations: 0,
            });
        }
        Lambda::Finite(l) if l >= 0.0 => l,
        Lambda::Finite(l) => return Err(IsotonicError::NegativeLambda(l)),
    };

    // F(B) = sum (r - mean_course(r))^2 + l * sum B^2 with r = y - B.
    let gradient = |b: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = yv.iter().zip(b).map(|(y, b)| y - b).collect();
        let m = means(&r);
        r.iter()
            .zip(&course)
            .zip(b)
            .map(|((r, &c), b)| -2.0 * (r - m[c]) + 2.0 * l * b)
            .collect()
    };

    let n = yv.len();
    let mut b = vec![0.0; n];
    let mut duals = vec![0.0; pairs.len()];
    let mut iterations = 0;
    loop {
        if iterations >= MAX_ITERATIONS {
            return Err(IsotonicError::NotConverged {
                iterations,
                residual: f64::NAN,
            });
        }
        iterations += 1;
        let g = gradient(&b);
        let mut t = 1.0;
        let next = loop {
            let target: Vec<f64> = b.iter().zip(&g).map(|(b, g)| b - t * g).collect();
            let cand = hildreth(&target, &pairs, &mut duals);
            let step: Vec<f64> = cand.iter().zip(&b).map(|(c, b)| c - b).collect();
            // F is quadratic, so F(B + s) - F(B) - <g, s> = ||P s||^2 + l ||s||^2
            // with P the per-course centering; comparing that against
            // ||s||^2 / (2t) avoids cancellation in F itself.
            let sm = means(&step);
            let curv: f64 = step.iter().zip(&course).map(|(s, &c)| (s - sm[c]).powi(2)).sum::<f64>()
                + l * step.iter().map(|s| s * s).sum::<f64>();
            let quad: f64 = step.iter().map(|s| s * s).sum::<f64>() / (2.0 * t);
            if curv <= quad || t < 1e-12 {
                break cand;
            }
            t *= 0.5;
        };
        let mapping = next.iter().zip(&b).fold(0.0f64, |a, (c, b)| a.max((c - b).abs())) / t;
        b = next;
        if mapping <= STATIONARITY {
            break;
        }
    }

    let resid: Vec<f64> = yv.iter().zip(&b).map(|(y, b)| y - b).collect();
    let mut x = means(&resid);

    if l == 0.0 {
        // Among (x + u, B - u) pick the smallest ||B||: weighted projection
        // of the course means of B onto u_j - u_i <= slack(i, j).
        let mut slack = vec![vec![f64::INFINITY; d]; d];
        for &(a, c) in &pairs {
            let (i, j) = (course[a], course[c]);
            if i != j {
                slack[i][j] = slack[i][j].min((b[c] - b[a]).max(0.0));
            }
        }
        let target = means(&b);
        let mut w = vec![0.0; d];
        for &c in &course {
            w[c] += 1.0;
        }
        let cons: Vec<(usize, usize, f64)> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| slack[i][j].is_finite())
            .map(|(i, j)| (i, j, slack[i][j]))
            .collect();
        let u = weighted_hildreth(&target, &w, &cons);
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi += ui;
        }
        for (be, &c) in b.iter_mut().zip(&course) {
            *be -= u[c];
        }
    }

    let objective = yv
        .iter()
        .zip(&b)
        .zip(&course)
        .map(|((y, b), &c)| (y - x[c] - b).powi(2) + l * b * b)
        .sum();
    Ok(OracleSolution {
        x: QualityVector(x),
        b: RatingMatrix::scatter(omega, &shape, &b),
        objective,
        iterations,
    })
}

/// Projection of `v` onto `{u : u_a <= u_b for (a, b) in pairs}` by dual
/// coordinate ascent, warm-started from `duals`.
fn hildreth(v: &[f64], pairs: &[(usize, usize)], duals: &mut [f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    for (&(a, b), &mu) in pairs.iter().zip(duals.iter()) {
        u[a] -= mu;
        u[b] += mu;
    }
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..HILDRETH_SWEEPS {
        let mut change = 0.0f64;
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let step = (0.5 * (u[a] - u[b])).max(-duals[k]);
            if step != 0.0 {
                duals[k] += step;
                u[a] -= step;
                u[b] += step;
                change = change.max(step.abs());
            }
        }
        if change <= 1e-16 * scale {
            break;
        }
    }
    u
}

/// Minimize `sum w_i (u_i - m_i)^2` subject to `u_j - u_i <= c` for each
/// `(i, j, c)`, by dual coordinate ascent from zero multipliers.
fn weighted_hildreth(m: &[f64], w: &[f64], cons: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut u = m.to_vec();
    let mut duals = vec![0.0; cons.len()];
    let scale = 1.0 + m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for _ in 0..HILDRETH_SWEEPS {
        let mut change = 0.0f64;
        for (k, &(i, j, c)) in cons.iter().enumerate() {
            let viol = u[j] - u[i] - c;
            let denom = 0.5 / w[i] + 0.5 / w[j];
            let step = (viol / denom).max(-duals[k]);
            if step != 0.0 {
                duals[k] += step;
                u[j] -= step / (2.0 * w[j]);
                u[i] += step / (2.0 * w[i]);
                change = change.max(step.abs());
            }
        }
        if change <= 1e-16 * scale {
            break;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{build_group_ordering, ElementId};

    #[test]
    fn infinity_gives_means() {
        let y = RatingMatrix::new(vec![vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        let omega = ObservationSet::full(&[2, 2]).unwrap();
        let a: Vec<_> = (0..4).map(|k| (ElementId::new(k / 2, k % 2), k % 2)).collect();
        let o = build_group_ordering(&a, 2).unwrap();
        let s = qp_oracle(&y, &o, Lambda::Infinity, &omega).unwrap();
        assert_eq!(s.x.0, vec![2.0, 3.0]);
        assert_eq!(s.b, RatingMatrix::zeros(&[2, 2]));
    }

    #[test]
    fn separable_example_at_zero() {
        // Course 0 all group 0, course 1 all group 1.
        let y = RatingMatrix::new(vec![vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let omega = ObservationSet::full(&[2, 2]).unwrap();
        let a: Vec<_> = (0..4).map(|k| (ElementId::new(k / 2, k % 2), k / 2)).collect();
        let o = build_group_ordering(&a, 2).unwrap();
        let s = qp_oracle(&y, &o, Lambda::Finite(0.0), &omega).unwrap();
        assert!((s.x.0[0] + 1.0).abs() < 1e-8 && (s.x.0[1] - 1.0).abs() < 1e-8, "{:?}", s.x);
        assert!(s.b.rows().iter().flatten().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn within_course_groups_at_zero() {
        let y = RatingMatrix::new(vec![vec![0.0, 10.0], vec![1.0, 3.0]]).unwrap();
        let omega = ObservationSet::full(&[2, 2]).unwrap();
        let a: Vec<_> = (0..4).map(|k| (ElementId::new(k / 2, k % 2), k % 2)).collect();
        let o = build_group_ordering(&a, 2).unwrap();
        let s = qp_oracle(&y, &o, Lambda::Finite(0.0), &omega).unwrap();
        assert!((s.x.0[0] - 5.0).abs() < 1e-8 && (s.x.0[1] - 2.0).abs() < 1e-8, "{:?}", s.x);
        assert!((s.b.row(0)[0] + 5.0).abs() < 1e-8 && (s.b.row(1)[1] - 1.0).abs() < 1e-8);
    }
}
