//! Ordering-guided cross-validation for the regularization weight.
//!
//! One random linear extension decides the split: within each course,
//! consecutive cells (in extension order) are paired and one of each pair
//! goes to training. After fitting on the training cells, the bias of every
//! validation cell is interpolated from its nearest training neighbours
//! along further sampled extensions, and the validation residual scores the
//! weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{DataError, ObservationSet, QualityVector, RatingMatrix};
use crate::estimator::{FitError, FitProblem, Lambda, Solution};
use crate::poset::sample::sample_extension_indices;
use crate::poset::{ElementId, PartialOrder, PosetError, Structure};

/// Sampled extensions used for interpolation unless configured otherwise.
pub const DEFAULT_EXTENSIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CvError {
    #[error("course {course} has {cells} observed cell(s); the split needs at least 2")]
    CourseTooSmall { course: usize, cells: usize },
    #[error("extension count must be at least 1")]
    NoExtensions,
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("training set is empty")]
    EmptyTrain,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Order(#[from] PosetError),
}

/// Disjoint training and validation cells covering the observed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: ObservationSet,
    pub validation: ObservationSet,
}

/// Which cells the final estimate is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Refit {
    /// Refit on every observed cell at the selected weight.
    #[default]
    Full,
    /// Keep the training-set fit at the selected weight.
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub grid: Vec<Lambda>,
    pub extensions: usize,
    pub seed: u64,
    pub refit: Refit,
}

impl CvConfig {
    pub fn new(grid: Vec<Lambda>, extensions: usize, seed: u64) -> Self {
        Self {
            grid,
            extensions,
            seed,
            refit: Refit::Full,
        }
    }
}

/// Per-weight validation errors and the selected weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub errors: Vec<(Lambda, f64)>,
    pub selected: Lambda,
    pub selected_index: usize,
    /// Extensions actually averaged (forced to 1 for total orderings).
    pub extensions_used: usize,
    pub seed: u64,
    pub train_cells: usize,
    pub validation_cells: usize,
}

/// Split `omega` guided by one sampled extension of `order`.
///
/// Per course: cells sorted by extension rank, consecutive pairs split one
/// each way uniformly at random, an odd last cell goes to validation.
pub fn split<R: Rng + ?Sized>(omega: &ObservationSet, order: &PartialOrder, rng: &mut R) -> Result<Split, CvError> {
    Ok(split_with_extension(omega, order, rng)?.0)
}

/// [`split`] that also returns the guiding extension, lowest first.
pub(crate) fn split_with_extension<R: Rng + ?Sized>(
    omega: &ObservationSet,
    order: &PartialOrder,
    rng: &mut R,
) -> Result<(Split, Vec<ElementId>), CvError> {
    for (course, &cells) in omega.sizes().iter().enumerate() {
        if cells < 2 {
            return Err(CvError::CourseTooSmall { course, cells });
        }
    }
    let elements = omega.elements();
    let sub = order.restrict(&elements)?;
    let ranked = sample_extension_indices(&sub, rng);
    let d = omega.courses();
    let mut by_course: Vec<Vec<usize>> = vec![Vec::new(); d];
    for &i in &ranked {
        by_course[elements[i].course].push(elements[i].slot);
    }
    let mut train = vec![Vec::new(); d];
    let mut validation = vec![Vec::new(); d];
    for (c, slots) in by_course.iter().enumerate() {
        let mut pairs = slots.chunks_exact(2);
        for p in &mut pairs {
            let (t, v) = if rng.random_bool(0.5) { (p[0], p[1]) } else { (p[1], p[0]) };
            train[c].push(t);
            validation[c].push(v);
        }
        validation[c].extend(pairs.remainder());
    }
    let split = Split {
        train: ObservationSet::new(train)?,
        validation: ObservationSet::new(validation)?,
    };
    Ok((split, ranked.into_iter().map(|i| elements[i]).collect()))
}

/// Linear map from training-cell biases to interpolated validation biases,
/// averaged over sampled extensions. Built once and reused for every weight.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    /// For each validation cell (flat order of `validation`): the training
    /// cells (flat order of `train`) and their weights.
    rows: Vec<Vec<(usize, f64)>>,
    extensions: usize,
}

impl InterpolationPlan {
    /// Sample `k` extensions of `order` over the union of the split and
    /// record, for every validation cell, its nearest training cell by rank
    /// (both neighbours averaged when equidistant). Total orderings use a
    /// single extension. For group and tree orderings the rows of cells in
    /// the same group or node are averaged: those cells are exchangeable, so
    /// the exact average over all extensions gives them equal values.
    pub fn build<R: Rng + ?Sized>(order: &PartialOrder, split: &Split, k: usize, rng: &mut R) -> Result<Self, CvError> {
        if k == 0 {
            return Err(CvError::NoExtensions);
        }
        let train_els = split.train.elements();
        let val_els = split.validation.elements();
        let mut all = train_els.clone();
        all.extend(&val_els);
        let sub = order.restrict(&all)?;
        let n_train = train_els.len();
        let k = if matches!(sub.structure(), Structure::Total { .. }) { 1 } else { k };

        let mut acc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); val_els.len()];
        let w = 1.0 / k as f64;
        for _ in 0..k {
            let ranked = sample_extension_indices(&sub, rng);
            let len = ranked.len();
            // Nearest training position at or below / at or above each rank.
            let mut below = vec![None; len];
            let mut last = None;
            for (p, &i) in ranked.iter().enumerate() {
                if i < n_train {
                    last = Some(p);
                }
                below[p] = last;
            }
            let mut above = vec![None; len];
            let mut next = None;
            for (p, &i) in ranked.iter().enumerate().rev() {
                if i < n_train {
                    next = Some(p);
                }
                above[p] = next;
            }
            for (p, &i) in ranked.iter().enumerate() {
                if i < n_train {
                    continue;
                }
                let row = &mut acc[i - n_train];
                match (below[p], above[p]) {
                    (Some(lo), Some(hi)) => {
                        let (dl, dh) = (p - lo, hi - p);
                        if dl == dh {
                            row.push((ranked[lo], 0.5 * w));
                            row.push((ranked[hi], 0.5 * w));
                        } else if dl < dh {
                            row.push((ranked[lo], w));
                        } else {
                            row.push((ranked[hi], w));
                        }
                    }
                    (Some(q), None) | (None, Some(q)) => row.push((ranked[q], w)),
                    (None, None) => return Err(CvError::EmptyTrain),
                }
            }
        }
        let mut rows: Vec<Vec<(usize, f64)>> = acc.into_iter().map(compress).collect();

        let class_of: Option<Vec<usize>> = match sub.structure() {
            Structure::Group { group_of, .. } => Some(group_of[n_train..].to_vec()),
            Structure::Tree { node_of, .. } => Some(node_of[n_train..].to_vec()),
            _ => None,
        };
        if let Some(class_of) = class_of {
            let classes = class_of.iter().max().map_or(0, |m| m + 1);
            let mut members = vec![Vec::new(); classes];
            for (v, &c) in class_of.iter().enumerate() {
                members[c].push(v);
            }
            for m in members.iter().filter(|m| m.len() > 1) {
                let share = 1.0 / m.len() as f64;
                let merged: Vec<(usize, f64)> = m
                    .iter()
                    .flat_map(|&v| rows[v].iter().map(move |&(t, x)| (t, x * share)))
                    .collect();
                let merged = compress(merged);
                for &v in m {
                    rows[v] = merged.clone();
                }
            }
        }
        Ok(Self { rows, extensions: k })
    }

    pub fn extensions(&self) -> usize {
        self.extensions
    }

    /// Interpolated validation biases from training biases (both flat).
    pub fn apply(&self, b_train: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(t, w)| w * b_train[t]).sum())
            .collect()
    }
}

fn compress(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(t, _)| t);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (t, w) in row {
        match out.last_mut() {
            Some((lt, lw)) if *lt == t => *lw += w,
            _ => out.push((t, w)),
        }
    }
    out
}

/// Interpolate training biases onto the validation cells, averaging over `k`
/// sampled extensions. The result is zero outside the validation cells.
pub fn interpolate<R: Rng + ?Sized>(
    b_hat_train: &RatingMatrix,
    split: &Split,
    order: &PartialOrder,
    k: usize,
    rng: &mut R,
) -> Result<RatingMatrix, CvError> {
    let plan = InterpolationPlan::build(order, split, k, rng)?;
    let b_train = b_hat_train.gather(&split.train)?;
    let values = plan.apply(&b_train);
    Ok(RatingMatrix::scatter(&split.validation, &b_hat_train.shape(), &values))
}

/// Mean squared validation residual `y - x[course] - b_tilde`.
pub fn cv_error(
    y: &RatingMatrix,
    x_hat: &QualityVector,
    b_tilde: &RatingMatrix,
    validation: &ObservationSet,
) -> Result<f64, CvError> {
    if validation.is_empty() {
        return Err(CvError::EmptyValidation);
    }
    let yv = y.gather(validation)?;
    let bv = b_tilde.gather(validation)?;
    let course = validation.course_of_flat();
    if x_hat.len() < validation.courses() {
        return Err(DataError::LengthMismatch {
            left: x_hat.len(),
            right: validation.courses(),
        }
        .into());
    }
    let s: f64 = yv
        .iter()
        .zip(&bv)
        .zip(&course)
        .map(|((y, b), &c)| (y - x_hat.0[c] - b).powi(2))
        .sum();
    Ok(s / yv.len() as f64)
}

/// Index of the smallest error, first one on ties; NaN never wins.
pub fn argmin_lambda(errors: &[(Lambda, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(_, e)) in errors.iter().enumerate() {
        let e = if e.is_nan() { f64::INFINITY } else { e };
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((i, e));
        }
    }
    best.map(|(i, _)| i)
}

struct CvRun {
    report: CvReport,
    train_fits: Vec<Solution>,
}

fn run_cv(y: &RatingMatrix, order: &PartialOrder, omega: &ObservationSet, cfg: &CvConfig) -> Result<CvRun, CvError> {
    if cfg.grid.is_empty() {
        return Err(CvError::EmptyGrid);
    }
    if cfg.extensions == 0 {
        return Err(CvError::NoExtensions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let split = split(omega, order, &mut rng)?;
    let plan = InterpolationPlan::build(order, &split, cfg.extensions, &mut rng)?;
    let problem = FitProblem::new(y, order, &split.train)?;

    let scored: Vec<(Solution, f64)> = cfg
        .grid
        .par_iter()
        .map(|&lambda| -> Result<(Solution, f64), CvError> {
            let sol = problem.solve(lambda)?;
            let b_train = sol.b_hat.gather(&split.train)?;
            let b_val = plan.apply(&b_train);
            let b_tilde = RatingMatrix::scatter(&split.validation, &y.shape(), &b_val);
            let err = cv_error(y, &sol.x_hat, &b_tilde, &split.validation)?;
            Ok((sol, err))
        })
        .collect::<Result<_, _>>()?;

    let errors: Vec<(Lambda, f64)> = cfg.grid.iter().zip(&scored).map(|(&l, (_, e))| (l, *e)).collect();
    let selected_index = argmin_lambda(&errors).expect("non-empty grid");
    let report = CvReport {
        selected: cfg.grid[selected_index],
        selected_index,
        errors,
        extensions_used: plan.extensions(),
        seed: cfg.seed,
        train_cells: split.train.len(),
        validation_cells: split.validation.len(),
    };
    Ok(CvRun {
        report,
        train_fits: scored.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Score every weight of the grid on one split and pick the best.
pub fn select_lambda(y: &RatingMatrix, order: &PartialOrder, omega: &ObservationSet, cfg: &CvConfig) -> Result<CvReport, CvError> {
    Ok(run_cv(y, order, omega, cfg)?.report)
}

/// Select the weight by cross-validation, then fit at it (on all cells, or
/// keep the training fit with [`Refit::TrainOnly`]).
pub fn fit_cv(
    y: &RatingMatrix,
    order: &PartialOrder,
    omega: &ObservationSet,
    cfg: &CvConfig,
) -> Result<(Solution, CvReport), CvError> {
    let run = run_cv(y, order, omega, cfg)?;
    let sol = match cfg.refit {
        Refit::Full => FitProblem::new(y, order, omega)?.solve(run.report.selected)?,
        Refit::TrainOnly => run.train_fits[run.report.selected_index].clone(),
    };
    Ok((sol, run.report))
}
