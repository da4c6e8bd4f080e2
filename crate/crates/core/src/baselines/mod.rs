//! Reference estimators: course mean, course median and the reweighted mean
//! for group-structured orderings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{course_means, DataError, ObservationSet, QualityVector, RatingMatrix};
use crate::poset::{PartialOrder, PosetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("course {0} has no observed cells")]
    EmptyCourse(usize),
    #[error("no group is present in every course; the reweighted mean is undefined")]
    NoSharedGroup,
    #[error("node {node} is absent from course {course}; node reweighting is not applicable")]
    NodeNotShared { node: usize, course: usize },
    #[error("expected a {expected} ordering, got {got}")]
    WrongKind { expected: &'static str, got: String },
    #[error("layout covers {layout} cells, observation set has {omega}")]
    LayoutMismatch { layout: usize, omega: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Order(#[from] PosetError),
}

/// Partition of the observed cells into classes (groups, tree nodes or tree
/// levels), with per-course class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLayout {
    /// `ell[i][k]`: cells of course `i` in class `k`.
    pub ell: Vec<Vec<usize>>,
    /// Smallest count of each class over courses.
    pub ell_min: Vec<usize>,
    /// Classes present in every course, ascending.
    pub shared: Vec<usize>,
    /// Class of each observed cell, course-major.
    class_of: Vec<usize>,
}

/// Which tree partition the reweighted mean uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeMode {
    Node,
    Level,
}

impl GroupLayout {
    /// Layout from the class of each observed cell (course-major order of
    /// `omega`).
    pub fn from_classes(omega: &ObservationSet, class_of: Vec<usize>) -> Result<Self, BaselineError> {
        if class_of.len() != omega.len() {
            return Err(BaselineError::LayoutMismatch {
                layout: class_of.len(),
                omega: omega.len(),
            });
        }
        let classes = class_of.iter().max().map_or(0, |m| m + 1);
        let mut ell = vec![vec![0; classes]; omega.courses()];
        for (&k, c) in class_of.iter().zip(omega.course_of_flat()) {
            ell[c][k] += 1;
        }
        let ell_min: Vec<usize> = (0..classes)
            .map(|k| ell.iter().map(|row| row[k]).min().unwrap_or(0))
            .collect();
        let shared = (0..classes).filter(|&k| ell_min[k] > 0).collect();
        Ok(Self {
            ell,
            ell_min,
            shared,
            class_of,
        })
    }

    /// Groups of a group ordering restricted to `omega`.
    pub fn from_group_order(order: &PartialOrder, omega: &ObservationSet) -> Result<Self, BaselineError> {
        let sub = order.restrict(&omega.elements())?;
        let classes: Option<Vec<usize>> = (0..sub.len()).map(|i| sub.group_of(i)).collect();
        match (sub.group_count(), classes) {
            (Some(_), Some(c)) => Self::from_classes(omega, c),
            _ => Err(BaselineError::WrongKind {
                expected: "group",
                got: sub.kind().to_string(),
            }),
        }
    }

    /// Nodes or depth levels of a tree ordering restricted to `omega`.
    pub fn from_tree_order(order: &PartialOrder, omega: &ObservationSet, mode: TreeMode) -> Result<Self, BaselineError> {
        let sub = order.restrict(&omega.elements())?;
        let wrong = || BaselineError::WrongKind {
            expected: "tree",
            got: sub.kind().to_string(),
        };
        let nodes: Vec<usize> = (0..sub.len()).map(|i| sub.node_of(i)).collect::<Option<_>>().ok_or_else(wrong)?;
        let classes = match mode {
            TreeMode::Node => nodes,
            TreeMode::Level => {
                let depth = sub.tree_depths().ok_or_else(wrong)?;
                nodes.iter().map(|&v| depth[v]).collect()
            }
        };
        Self::from_classes(omega, classes)
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }
}

fn check_courses(omega: &ObservationSet) -> Result<(), BaselineError> {
    match omega.sizes().iter().position(|&n| n == 0) {
        Some(i) => Err(BaselineError::EmptyCourse(i)),
        None => Ok(()),
    }
}

/// Per-course mean over the observed cells.
pub fn mean_estimator(y: &RatingMatrix, omega: &ObservationSet) -> Result<QualityVector, BaselineError> {
    check_courses(omega)?;
    let yv = y.gather(omega)?;
    Ok(QualityVector(course_means(&yv, &omega.sizes())))
}

/// Per-course median; even counts average the two central values.
pub fn median_estimator(y: &RatingMatrix, omega: &ObservationSet) -> Result<QualityVector, BaselineError> {
    check_courses(omega)?;
    let yv = y.gather(omega)?;
    let mut out = Vec::with_capacity(omega.courses());
    let mut start = 0;
    for n in omega.sizes() {
        let mut v = yv[start..start + n].to_vec();
        start += n;
        v.sort_by(f64::total_cmp);
        let m = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        out.push(m);
    }
    Ok(QualityVector(out))
}

/// Weighted average of per-(course, class) means over the classes present
/// in every course, with class `k` weighted by its smallest count, then
/// shifted so that `sum_i n_i x_i / |omega|` equals the grand mean.
pub fn reweighted_mean(y: &RatingMatrix, layout: &GroupLayout, omega: &ObservationSet) -> Result<QualityVector, BaselineError> {
    check_courses(omega)?;
    if layout.class_of.len() != omega.len() {
        return Err(BaselineError::LayoutMismatch {
            layout: layout.class_of.len(),
            omega: omega.len(),
        });
    }
    if layout.shared.is_empty() {
        return Err(BaselineError::NoSharedGroup);
    }
    let yv = y.gather(omega)?;
    let course = omega.course_of_flat();
    let d = omega.courses();
    let classes = layout.ell_min.len();
    let mut sums = vec![vec![0.0; classes]; d];
    for ((&v, &c), &k) in yv.iter().zip(&course).zip(&layout.class_of) {
        sums[c][k] += v;
    }
    let total_min: f64 = layout.shared.iter().map(|&k| layout.ell_min[k] as f64).sum();
    let mut x: Vec<f64> = (0..d)
        .map(|i| {
            layout
                .shared
                .iter()
                .map(|&k| layout.ell_min[k] as f64 / total_min * sums[i][k] / layout.ell[i][k] as f64)
                .sum()
        })
        .collect();

    let n_total = yv.len() as f64;
    let sizes = omega.sizes();
    let weighted: f64 = x.iter().zip(&sizes).map(|(x, &n)| n as f64 * x).sum::<f64>() / n_total;
    let grand = yv.iter().sum::<f64>() / n_total;
    let shift = grand - weighted;
    for v in &mut x {
        *v += shift;
    }
    Ok(QualityVector(x))
}

/// Reweighted mean over tree nodes or depth levels. Node mode requires every
/// occupied node to appear in every course.
pub fn reweighted_mean_tree(
    y: &RatingMatrix,
    order: &PartialOrder,
    mode: TreeMode,
    omega: &ObservationSet,
) -> Result<QualityVector, BaselineError> {
    let layout = GroupLayout::from_tree_order(order, omega, mode)?;
    if mode == TreeMode::Node {
        for node in 0..layout.ell_min.len() {
            let course = layout.ell.iter().position(|row| row[node] == 0);
            let occupied = layout.ell.iter().any(|row| row[node] > 0);
            if let (Some(course), true) = (course, occupied) {
                return Err(BaselineError::NodeNotShared { node, course });
            }
        }
    }
    reweighted_mean(y, &layout, omega)
}
