//! Joint estimation of course qualities and ordered rating biases.
//!
//! For a weight `lambda` the estimator minimizes
//! `||Y - x 1^T - B||^2 + lambda ||B||^2` over the observed cells, subject to
//! `B` satisfying the ordering. At `lambda = 0` the minimizer is not unique
//! and the one with the smallest `||B||` is returned. `Lambda::Infinity`
//! forces `B = 0`, which gives plain course means.

mod closed_form;
mod solver;
mod tiebreak;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use closed_form::closed_form_d2r2;
pub use solver::FitProblem;

use crate::datamodel::{DataError, ObservationSet, QualityVector, RatingMatrix};
use crate::poset::{PartialOrder, PosetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("lambda must be a non-negative number or `inf`, got `{0}`")]
    InvalidLambda(String),
    #[error("course {0} has no observed cells")]
    EmptyCourse(usize),
    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient:e})")]
    NotConverged { iterations: usize, gradient: f64 },
    #[error("closed form needs two courses and two groups: {0}")]
    ClosedFormShape(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Order(#[from] PosetError),
}

/// Regularization weight: a finite non-negative number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Lambda {
    Finite(f64),
    Infinity,
}

impl Lambda {
    pub fn finite(v: f64) -> Result<Self, FitError> {
        if v >= 0.0 && v.is_finite() {
            Ok(Lambda::Finite(v))
        } else if v == f64::INFINITY {
            Ok(Lambda::Infinity)
        } else {
            Err(FitError::InvalidLambda(v.to_string()))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Lambda::Infinity)
    }

    /// Numeric value, with `f64::INFINITY` for the symbolic case.
    pub fn value(&self) -> f64 {
        match *self {
            Lambda::Finite(v) => v,
            Lambda::Infinity => f64::INFINITY,
        }
    }

    /// `{0} ∪ {2^k : lo <= k <= hi} ∪ {inf}`, ascending.
    pub fn power_grid(lo: i32, hi: i32) -> Vec<Lambda> {
        let mut grid = vec![Lambda::Finite(0.0)];
        grid.extend((lo..=hi).map(|k| Lambda::Finite(2f64.powi(k))));
        grid.push(Lambda::Infinity);
        grid
    }

    /// The grid used by the simulation defaults: 0, 2^-9 .. 2^5, inf.
    pub fn default_grid() -> Vec<Lambda> {
        Self::power_grid(-9, 5)
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(v) => write!(f, "{v}"),
            Lambda::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Lambda {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || FitError::InvalidLambda(s.to_string());
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => return Ok(Lambda::Infinity),
            _ => {}
        }
        if let Some(exp) = t.strip_prefix("2^") {
            let k: f64 = exp.trim().parse().map_err(|_| bad())?;
            return Lambda::finite(2f64.powf(k)).map_err(|_| bad());
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        Lambda::finite(v).map_err(|_| bad())
    }
}

impl From<Lambda> for String {
    fn from(l: Lambda) -> Self {
        l.to_string()
    }
}

impl TryFrom<String> for Lambda {
    type Error = FitError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parse a comma-separated list of weights, e.g. `0,2^-3,0.5,inf`.
pub fn parse_lambda_list(s: &str) -> Result<Vec<Lambda>, FitError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub feasibility_residual: f64,
    pub converged: bool,
}

/// Estimated qualities and biases for one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x_hat: QualityVector,
    /// Zero outside the observed cells.
    pub b_hat: RatingMatrix,
    pub lambda: Lambda,
    pub diagnostics: Diagnostics,
}

/// Solve the estimator on the cells `omega` of `y`.
pub fn fit(y: &RatingMatrix, order: &PartialOrder, lambda: Lambda, omega: &ObservationSet) -> Result<Solution, FitError> {
    FitProblem::new(y, order, omega)?.solve(lambda)
}

/// The `lambda = 0` solution with the minimum-norm tie-break.
pub fn fit_at_zero(y: &RatingMatrix, order: &PartialOrder, omega: &ObservationSet) -> Result<Solution, FitError> {
    fit(y, order, Lambda::Finite(0.0), omega)
}

/// `||y - x - b||^2 + lambda ||b||^2` over `omega`; the penalty is dropped
/// at infinity, where `b` is zero.
pub fn objective(
    y: &RatingMatrix,
    x: &QualityVector,
    b: &RatingMatrix,
    lambda: Lambda,
    omega: &ObservationSet,
) -> Result<f64, FitError> {
    let yv = y.gather(omega)?;
    let bv = b.gather(omega)?;
    let course = omega.course_of_flat();
    let fit: f64 = yv
        .iter()
        .zip(&bv)
        .zip(&course)
        .map(|((y, b), &c)| (y - x.0[c] - b).powi(2))
        .sum();
    let pen: f64 = match lambda {
        Lambda::Finite(l) => l * bv.iter().map(|b| b * b).sum::<f64>(),
        Lambda::Infinity => 0.0,
    };
    Ok(fit + pen)
}
