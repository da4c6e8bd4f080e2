//! Isotonic projection on chains and partial orders.
//!
//! Chains use PAVA. Group and tree orderings are reduced to a chain or a
//! tree of chains first: elements that share all their constraints keep the
//! order of their input values in the projection, so they can be sorted and
//! chained without changing the answer. Everything else goes through the
//! min-cut partitioning solver in [`partition`].

mod oracle;
mod partition;
mod pava;

use std::ops::Range;

use thiserror::Error;

pub use oracle::{qp_oracle, OracleSolution};
pub use pava::pava;

use crate::poset::{tree_children, PartialOrder, PosetError, Structure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsotonicError {
    #[error("input is empty")]
    Empty,
    #[error("weight {weight} at index {index} is not positive")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Order(#[from] PosetError),
    #[error("{0}")]
    Data(String),
}

/// Values with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSequence {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSequence {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self, IsotonicError> {
        if values.is_empty() {
            return Err(IsotonicError::Empty);
        }
        check_weights(&weights, values.len())?;
        Ok(Self { values, weights })
    }

    pub fn unit(values: Vec<f64>) -> Self {
        let weights = vec![1.0; values.len()];
        Self { values, weights }
    }
}

/// Chain projection with its level sets as contiguous index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    pub blocks: Vec<Range<usize>>,
}

fn check_weights(weights: &[f64], len: usize) -> Result<(), IsotonicError> {
    if weights.len() != len {
        return Err(IsotonicError::LengthMismatch {
            left: len,
            right: weights.len(),
        });
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
        return Err(IsotonicError::NonPositiveWeight { index, weight });
    }
    Ok(())
}

fn resolve_weights(weights: Option<&[f64]>, len: usize) -> Result<Vec<f64>, IsotonicError> {
    match weights {
        Some(w) => {
            check_weights(w, len)?;
            Ok(w.to_vec())
        }
        None => Ok(vec![1.0; len]),
    }
}

/// Weighted projection of `values` (indexed by element position of `order`)
/// onto the vectors satisfying `order`. Unit weights when `weights` is None.
pub fn isotonic_project(values: &[f64], order: &PartialOrder, weights: Option<&[f64]>) -> Result<Vec<f64>, IsotonicError> {
    if values.len() != order.len() {
        return Err(IsotonicError::LengthMismatch {
            left: values.len(),
            right: order.len(),
        });
    }
    let w = resolve_weights(weights, values.len())?;
    Ok(project_with_labels(values, &w, order).0)
}

/// Minimizer of `sum w (v - u)^2 + lambda * sum w u^2` over ordered `u`,
/// which is the projection scaled by `1 / (1 + lambda)`.
pub fn regularized_isotonic(
    values: &[f64],
    order: &PartialOrder,
    lambda: f64,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, IsotonicError> {
    if !(lambda >= 0.0) {
        return Err(IsotonicError::NegativeLambda(lambda));
    }
    let proj = isotonic_project(values, order, weights)?;
    Ok(proj.into_iter().map(|u| u / (1.0 + lambda)).collect())
}

/// Projection under explicit constraints `u[a] <= u[b]` for each pair.
pub fn isotonic_project_pairs(
    values: &[f64],
    pairs: &[(usize, usize)],
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, IsotonicError> {
    let n = values.len();
    let w = resolve_weights(weights, n)?;
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in pairs {
        if a >= n || b >= n {
            return Err(IsotonicError::LengthMismatch {
                left: n,
                right: a.max(b) + 1,
            });
        }
        succ[a].push(b);
    }
    Ok(partition::project_dag(values, &w, &succ).0)
}

fn sorted_by_value(members: &mut [usize], values: &[f64]) {
    members.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
}

/// Labels for chain blocks: the smallest element index in each block.
fn chain_labels(chain: &[usize], blocks: &[Range<usize>], n: usize) -> Vec<usize> {
    let mut label = vec![0; n];
    for r in blocks {
        let first = *chain[r.clone()].iter().min().expect("non-empty block");
        for &i in &chain[r.clone()] {
            label[i] = first;
        }
    }
    label
}

/// Projection plus a level-set label per element (the smallest element
/// index in its block). Weights are assumed valid.
pub(crate) fn project_with_labels(values: &[f64], weights: &[f64], order: &PartialOrder) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    match order.structure() {
        Structure::Total { .. } => {
            let chain = order.chain().expect("total ordering");
            let (fitted, blocks) = pava::pava_on_chain(values, weights, &chain);
            (fitted, chain_labels(&chain, &blocks, n))
        }
        Structure::Group { group_of, groups } => {
            let mut buckets = vec![Vec::new(); *groups];
            for (i, &g) in group_of.iter().enumerate() {
                buckets[g].push(i);
            }
            let mut chain = Vec::with_capacity(n);
            for mut b in buckets {
                sorted_by_value(&mut b, values);
                chain.extend(b);
            }
            let (fitted, blocks) = pava::pava_on_chain(values, weights, &chain);
            (fitted, chain_labels(&chain, &blocks, n))
        }
        Structure::Tree { node_of, parent } => {
            let nodes = parent.len();
            let mut members = vec![Vec::new(); nodes];
            for (i, &nd) in node_of.iter().enumerate() {
                members[nd].push(i);
            }
            for m in &mut members {
                sorted_by_value(m, values);
            }
            let children = tree_children(parent);
            let mut succ = vec![Vec::new(); n];
            for m in &members {
                for w in m.windows(2) {
                    succ[w[0]].push(w[1]);
                }
            }
            // Link the top of each non-empty node to the bottom of the
            // nearest non-empty descendants.
            for v in 0..nodes {
                let Some(&top) = members[v].last() else { continue };
                let mut stack: Vec<usize> = children[v].clone();
                while let Some(c) = stack.pop() {
                    match members[c].first() {
                        Some(&bottom) => succ[top].push(bottom),
                        None => stack.extend(children[c].iter().copied()),
                    }
                }
            }
            if parent.iter().all(Option::is_none) && nodes <= 1 {
                let chain = members.concat();
                let (fitted, blocks) = pava::pava_on_chain(values, weights, &chain);
                return (fitted, chain_labels(&chain, &blocks, n));
            }
            partition::project_dag(values, weights, &succ)
        }
        Structure::Dag { succ, .. } => partition::project_dag(values, weights, succ),
    }
}
