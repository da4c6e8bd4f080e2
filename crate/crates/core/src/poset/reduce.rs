use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tree_topological, ElementId, PartialOrder, PosetError, Structure};
use crate::datamodel::RatingMatrix;

/// Explicit pairwise constraints, each meaning `first <= second`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub pairs: Vec<(ElementId, ElementId)>,
}

/// Smaller constraint set with the same estimator optimum.
///
/// * Group: inside each (course, group) cell the optimal bias follows the
///   order of `y`, so the cell becomes a chain sorted by `y` (ties broken by
///   slot) and only the cell's extremes are linked to other cells. The
///   in-cell chain pairs are not implied by the ordering itself; they only
///   preserve the optimum for this particular `y`.
/// * Total: consecutive ranks.
/// * Tree: every element linked to the elements of the nearest non-empty
///   proper ancestor node.
/// * Generic: the transitive reduction.
pub fn reduce_constraints(order: &PartialOrder, y: &RatingMatrix) -> Result<ConstraintSet, PosetError> {
    let els = order.elements();
    let idx_pairs: Vec<(usize, usize)> = match order.structure() {
        Structure::Group { group_of, .. } => {
            let values = order.gather(y)?;
            let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for (i, e) in els.iter().enumerate() {
                cells.entry((group_of[i], e.course)).or_default().push(i);
            }
            let mut pairs = Vec::new();
            let mut extremes = Vec::with_capacity(cells.len());
            for (&(g, _), members) in cells.iter_mut() {
                members.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(els[a].slot.cmp(&els[b].slot)));
                pairs.extend(members.windows(2).map(|w| (w[0], w[1])));
                extremes.push((g, members[0], *members.last().unwrap()));
            }
            for &(g1, _, hi) in &extremes {
                for &(g2, lo, _) in &extremes {
                    if g1 < g2 {
                        pairs.push((hi, lo));
                    }
                }
            }
            pairs
        }
        Structure::Total { .. } => {
            let chain = order.chain().expect("total ordering");
            chain.windows(2).map(|w| (w[0], w[1])).collect()
        }
        Structure::Tree { node_of, parent } => {
            let nodes = parent.len();
            let mut members = vec![Vec::new(); nodes];
            for (i, &nd) in node_of.iter().enumerate() {
                members[nd].push(i);
            }
            // Nearest non-empty proper ancestor of each node.
            let mut anchor: Vec<Option<usize>> = vec![None; nodes];
            for v in tree_topological(parent) {
                if let Some(p) = parent[v] {
                    anchor[v] = if members[p].is_empty() { anchor[p] } else { Some(p) };
                }
            }
            let mut pairs = Vec::new();
            for v in 0..nodes {
                if let Some(a) = anchor[v] {
                    for &lo in &members[a] {
                        for &hi in &members[v] {
                            pairs.push((lo, hi));
                        }
                    }
                }
            }
            pairs
        }
        Structure::Dag { succ, topo } => transitive_reduction(succ, topo),
    };
    Ok(ConstraintSet {
        pairs: idx_pairs.into_iter().map(|(a, b)| (els[a], els[b])).collect(),
    })
}

/// Edges `u -> v` of the DAG with no longer path from `u` to `v`.
pub(crate) fn transitive_reduction(succ: &[Vec<usize>], topo: &[usize]) -> Vec<(usize, usize)> {
    let n = succ.len();
    let words = n.div_ceil(64);
    // reach[u]: descendants of u, excluding u.
    let mut reach = vec![vec![0u64; words]; n];
    for &u in topo.iter().rev() {
        let mut acc = vec![0u64; words];
        for &v in &succ[u] {
            acc[v / 64] |= 1 << (v % 64);
            for (a, r) in acc.iter_mut().zip(&reach[v]) {
                *a |= r;
            }
        }
        reach[u] = acc;
    }
    let mut out = Vec::new();
    for u in 0..n {
        for &v in &succ[u] {
            let redundant = succ[u]
                .iter()
                .any(|&w| w != v && reach[w][v / 64] & (1 << (v % 64)) != 0);
            if !redundant {
                out.push((u, v));
            }
        }
    }
    out
}
