//! Profiled Newton solver.
//!
//! For fixed qualities `x` the best bias is `B(x) = P(y - x) / (1 + lambda)`
//! where `P` is the isotonic projection, so the problem reduces to the
//! convex, piecewise-quadratic function `g(x) = F(x, B(x))` of `d`
//! variables. Inside one piece (fixed level-set partition of the projection)
//! `g` is an exact quadratic, so Newton steps land on the piece minimizer and
//! the method stops as soon as a full step keeps the partition. An Armijo
//! line search handles piece changes; an exact `x` update (course means of
//! `y - B`) is the fallback when the Newton direction makes no progress.

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::tiebreak::{cross_course_slack, min_norm_shift};
use super::{Diagnostics, FitError, Lambda, Solution};
use crate::datamodel::{course_means, DataError, ObservationSet, QualityVector, RatingMatrix};
use crate::isotonic::project_with_labels;
use crate::poset::PartialOrder;

const MAX_ITERATIONS: usize = 10_000;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

/// Observations and ordering prepared once, solvable for many weights.
#[derive(Debug, Clone)]
pub struct FitProblem {
    omega: ObservationSet,
    shape: Vec<usize>,
    y: Vec<f64>,
    course_of: Vec<usize>,
    sizes: Vec<usize>,
    order: PartialOrder,
    ones: Vec<f64>,
}

struct Point {
    x: Vec<f64>,
    b: Vec<f64>,
    labels: Vec<usize>,
    g: f64,
    grad: Vec<f64>,
}

impl FitProblem {
    pub fn new(y: &RatingMatrix, order: &PartialOrder, omega: &ObservationSet) -> Result<Self, FitError> {
        if y.rows().len() != omega.courses() {
            return Err(DataError::ShapeMismatch(format!(
                "{} rating rows for {} observed courses",
                y.rows().len(),
                omega.courses()
            ))
            .into());
        }
        if let Some(i) = omega.sizes().iter().position(|&n| n == 0) {
            return Err(FitError::EmptyCourse(i));
        }
        let yv = y.gather(omega)?;
        let sub = order.restrict(&omega.elements())?;
        Ok(Self {
            shape: y.shape(),
            course_of: omega.course_of_flat(),
            sizes: omega.sizes(),
            ones: vec![1.0; yv.len()],
            y: yv,
            order: sub,
            omega: omega.clone(),
        })
    }

    pub fn omega(&self) -> &ObservationSet {
        &self.omega
    }

    /// The ordering restricted to the observed cells, indexed by flat cell.
    pub fn order(&self) -> &PartialOrder {
        &self.order
    }

    pub fn solve(&self, lambda: Lambda) -> Result<Solution, FitError> {
        match lambda {
            Lambda::Infinity => Ok(self.solve_at_infinity()),
            Lambda::Finite(l) if l >= 0.0 && l.is_finite() => self.solve_finite(l),
            Lambda::Finite(l) => Err(FitError::InvalidLambda(l.to_string())),
        }
    }

    fn solve_at_infinity(&self) -> Solution {
        let x = course_means(&self.y, &self.sizes);
        let objective = self
            .y
            .iter()
            .zip(&self.course_of)
            .map(|(y, &c)| (y - x[c]).powi(2))
            .sum();
        Solution {
            x_hat: QualityVector(x),
            b_hat: RatingMatrix::zeros(&self.shape),
            lambda: Lambda::Infinity,
            diagnostics: Diagnostics {
                iterations: 0,
                objective,
                feasibility_residual: 0.0,
                converged: true,
            },
        }
    }

    fn evaluate(&self, x: Vec<f64>, lambda: f64) -> Point {
        let v: Vec<f64> = self.y.iter().zip(&self.course_of).map(|(y, &c)| y - x[c]).collect();
        let (proj, labels) = project_with_labels(&v, &self.ones, &self.order);
        let shrink = 1.0 / (1.0 + lambda);
        let b: Vec<f64> = proj.iter().map(|p| p * shrink).collect();
        let mut g = 0.0;
        let mut grad = vec![0.0; x.len()];
        for ((v, b), &c) in v.iter().zip(&b).zip(&self.course_of) {
            let r = v - b;
            g += r * r + lambda * b * b;
            grad[c] -= 2.0 * r;
        }
        Point { x, b, labels, g, grad }
    }

    /// `-0.5 * M^+ grad` where `M = diag(n) - s * sum_blocks c c^T / |block|`
    /// is half the Hessian of the current piece (`c` holds per-course counts
    /// of a block, `s = 1 / (1 + lambda)`).
    fn newton_direction(&self, p: &Point, lambda: f64) -> Vec<f64> {
        let d = self.sizes.len();
        let shrink = 1.0 / (1.0 + lambda);
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (i, &n) in self.sizes.iter().enumerate() {
            m[(i, i)] = n as f64;
        }
        let mut idx: Vec<usize> = (0..self.y.len()).collect();
        idx.sort_unstable_by_key(|&e| (p.labels[e], self.course_of[e]));
        let mut counts: Vec<(usize, f64)> = Vec::new();
        let mut start = 0;
        while start < idx.len() {
            let label = p.labels[idx[start]];
            let mut end = start;
            counts.clear();
            while end < idx.len() && p.labels[idx[end]] == label {
                let c = self.course_of[idx[end]];
                match counts.last_mut() {
                    Some((last, k)) if *last == c => *k += 1.0,
                    _ => counts.push((c, 1.0)),
                }
                end += 1;
            }
            let size = (end - start) as f64;
            for &(i, ci) in &counts {
                for &(j, cj) in &counts {
                    m[(i, j)] -= shrink * ci * cj / size;
                }
            }
            start = end;
        }
        let eig = m.symmetric_eigen();
        let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let cutoff = 1e-10 * top;
        let grad = DVector::from_column_slice(&p.grad);
        let mut dir = DVector::<f64>::zeros(d);
        for (k, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev > cutoff {
                let q = eig.eigenvectors.column(k);
                dir += q * (q.dot(&grad) / ev);
            }
        }
        dir.iter().map(|v| -0.5 * v).collect()
    }

    fn solve_finite(&self, lambda: f64) -> Result<Solution, FitError> {
        let d = self.sizes.len();
        let scale = 1.0 + self.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let max_n = *self.sizes.iter().max().expect("at least one course") as f64;
        let grad_tol = 1e-13 * scale * self.y.len() as f64;
        let stall_tol = 1e-7 * scale * max_n;

        let mut cur = self.evaluate(course_means(&self.y, &self.sizes), lambda);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let gnorm = inf_norm(&cur.grad);
            if gnorm <= grad_tol {
                converged = true;
                break;
            }
            let dir = self.newton_direction(&cur, lambda);
            let slope: f64 = dir.iter().zip(&cur.grad).map(|(a, b)| a * b).sum();
            let mut step = None;
            if slope < 0.0 {
                let mut alpha = 1.0;
                for _ in 0..MAX_HALVINGS {
                    let x: Vec<f64> = cur.x.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
                    let next = self.evaluate(x, lambda);
                    if next.g <= cur.g + ARMIJO * alpha * slope {
                        step = Some((alpha, next));
                        break;
                    }
                    alpha *= 0.5;
                }
            }
            match step {
                Some((alpha, next)) => {
                    debug_assert!(next.g <= cur.g + 1e-12 * (1.0 + cur.g.abs()));
                    // Near a piece boundary full steps can keep switching
                    // pieces while the objective no longer moves in floating
                    // point; treat that as stationary too.
                    let stalled = cur.g - next.g <= 1e-14 * (1.0 + cur.g.abs());
                    let settled = (alpha == 1.0 && next.labels == cur.labels) || stalled;
                    cur = next;
                    if settled && inf_norm(&cur.grad) <= stall_tol {
                        converged = true;
                        break;
                    }
                }
                None => {
                    // Exact minimization over x for the current bias.
                    let resid: Vec<f64> = self.y.iter().zip(&cur.b).map(|(y, b)| y - b).collect();
                    let next = self.evaluate(course_means(&resid, &self.sizes), lambda);
                    let progress = cur.g - next.g;
                    if progress > 1e-15 * (1.0 + cur.g.abs()) {
                        cur = next;
                    } else {
                        converged = inf_norm(&cur.grad) <= stall_tol;
                        break;
                    }
                }
            }
        }
        if !converged {
            return Err(FitError::NotConverged {
                iterations,
                gradient: inf_norm(&cur.grad),
            });
        }
        debug!("lambda {lambda}: {iterations} iterations, objective {}", cur.g);

        let Point { mut x, mut b, g, .. } = cur;
        if lambda == 0.0 {
            let slack = cross_course_slack(&self.order, &b, &self.course_of, d);
            let bm = course_means(&b, &self.sizes);
            let u = min_norm_shift(&self.sizes, &bm, &slack);
            for (xi, ui) in x.iter_mut().zip(&u) {
                *xi += ui;
            }
            for (be, &c) in b.iter_mut().zip(&self.course_of) {
                *be -= u[c];
            }
        }
        let objective = self
            .y
            .iter()
            .zip(&b)
            .zip(&self.course_of)
            .map(|((y, b), &c)| (y - x[c] - b).powi(2) + lambda * b * b)
            .sum::<f64>();
        debug_assert!(objective <= g + 1e-9 * (1.0 + g.abs()));
        let feasibility_residual = self.order.max_violation(&b);
        Ok(Solution {
            x_hat: QualityVector(x),
            b_hat: RatingMatrix::scatter(&self.omega, &self.shape, &b),
            lambda: Lambda::Finite(lambda),
            diagnostics: Diagnostics {
                iterations,
                objective,
                feasibility_residual,
                converged,
            },
        })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}
