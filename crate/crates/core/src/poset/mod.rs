//! Partial orderings over rating elements.
//!
//! A [`PartialOrder`] records which bias terms are known to be no larger than
//! others. Four shapes are supported natively:
//!
//! * `Group`: elements are partitioned into totally ordered groups, and every
//!   element of a lower group is below every element of a higher group.
//!   Elements inside one group are unrelated.
//! * `Total`: a single chain.
//! * `Tree`: elements live on the nodes of a rooted forest; an element is below
//!   every element on a proper descendant node.
//! * `GenericDag`: an arbitrary acyclic edge list, closed transitively.
//!
//! Pairwise constraints are never stored for the structured kinds; they are
//! materialized on demand with [`PartialOrder::implied_pairs`].

mod io;
mod reduce;
pub(crate) mod sample;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reduce::{reduce_constraints, ConstraintSet};
pub use sample::{sample_linear_extension, TotalOrder};

use crate::datamodel::RatingMatrix;

/// Default absolute tolerance for feasibility checks on solver output.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Index pair `(course, slot)` identifying one rating.
///
/// The slot is positional: two courses sharing a slot index do not share a
/// rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementId {
    pub course: usize,
    pub slot: usize,
}

impl ElementId {
    pub fn new(course: usize, slot: usize) -> Self {
        Self { course, slot }
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.course, self.slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderKind {
    Group,
    Total,
    Tree,
    GenericDag,
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OrderKind::Group => "group",
            OrderKind::Total => "total",
            OrderKind::Tree => "tree",
            OrderKind::GenericDag => "dag",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosetError {
    #[error("ordering has no elements")]
    Empty,
    #[error("element {0} appears more than once")]
    DuplicateElement(ElementId),
    #[error("group index {group} of element {element} is outside [0, {groups})")]
    GroupOutOfRange {
        element: ElementId,
        group: usize,
        groups: usize,
    },
    #[error("a group ordering needs at least one group")]
    NoGroups,
    #[error("node {node} has more than one parent")]
    MultipleParents { node: usize },
    #[error("parent links contain a cycle through node {0}")]
    TreeCycle(usize),
    #[error("edge list contains a cycle")]
    DagCycle,
    #[error("element {0} is not part of the ordering")]
    UnknownElement(ElementId),
    #[error("matrix has no entry for element {0}")]
    ShapeMismatch(ElementId),
    #[error("{0} requires a group ordering")]
    NotGroupOrdering(&'static str),
    #[error("{0} requires a tree ordering")]
    NotTreeOrdering(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone)]
pub(crate) enum Structure {
    Group {
        group_of: Vec<usize>,
        groups: usize,
    },
    Total {
        rank_of: Vec<usize>,
    },
    Tree {
        node_of: Vec<usize>,
        parent: Vec<Option<usize>>,
    },
    Dag {
        succ: Vec<Vec<usize>>,
        topo: Vec<usize>,
    },
}

/// An ordering constraint set over rating elements.
///
/// Elements are addressed either by [`ElementId`] or by their position in
/// [`PartialOrder::elements`]; all internal structure is keyed by position.
#[derive(Debug, Clone)]
pub struct PartialOrder {
    elements: Vec<ElementId>,
    index: HashMap<ElementId, usize>,
    structure: Structure,
}

fn index_elements(elements: &[ElementId]) -> Result<HashMap<ElementId, usize>, PosetError> {
    if elements.is_empty() {
        return Err(PosetError::Empty);
    }
    let mut index = HashMap::with_capacity(elements.len());
    for (i, &e) in elements.iter().enumerate() {
        if index.insert(e, i).is_some() {
            return Err(PosetError::DuplicateElement(e));
        }
    }
    Ok(index)
}

/// Kahn's algorithm; `None` when the graph has a cycle.
fn topological_order(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &v in s {
            indeg[v] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        out.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    (out.len() == n).then_some(out)
}

impl PartialOrder {
    /// Group ordering with `groups` groups. `groups == 1` is accepted and
    /// imposes no constraints.
    pub fn group(assignment: &[(ElementId, usize)], groups: usize) -> Result<Self, PosetError> {
        if groups == 0 {
            return Err(PosetError::NoGroups);
        }
        let elements: Vec<ElementId> = assignment.iter().map(|&(e, _)| e).collect();
        let index = index_elements(&elements)?;
        let mut group_of = Vec::with_capacity(assignment.len());
        for &(element, group) in assignment {
            if group >= groups {
                return Err(PosetError::GroupOutOfRange {
                    element,
                    group,
                    groups,
                });
            }
            group_of.push(group);
        }
        Ok(Self {
            elements,
            index,
            structure: Structure::Group { group_of, groups },
        })
    }

    /// Chain in the given order, lowest bias first.
    pub fn total(ranked: &[ElementId]) -> Result<Self, PosetError> {
        let index = index_elements(ranked)?;
        Ok(Self {
            elements: ranked.to_vec(),
            index,
            structure: Structure::Total {
                rank_of: (0..ranked.len()).collect(),
            },
        })
    }

    /// Tree ordering. `parents` holds `(child, parent)` node links; nodes
    /// without a parent are roots. Node ids are dense from zero; the node
    /// count is one more than the largest id mentioned.
    pub fn tree(assignment: &[(ElementId, usize)], parents: &[(usize, usize)]) -> Result<Self, PosetError> {
        let elements: Vec<ElementId> = assignment.iter().map(|&(e, _)| e).collect();
        let index = index_elements(&elements)?;
        let nodes = assignment
            .iter()
            .map(|&(_, n)| n)
            .chain(parents.iter().flat_map(|&(c, p)| [c, p]))
            .max()
            .map_or(0, |m| m + 1);
        Self::tree_with_nodes(elements, index, assignment, parents, nodes)
    }

    fn tree_with_nodes(
        elements: Vec<ElementId>,
        index: HashMap<ElementId, usize>,
        assignment: &[(ElementId, usize)],
        parents: &[(usize, usize)],
        nodes: usize,
    ) -> Result<Self, PosetError> {
        let mut parent = vec![None; nodes];
        for &(child, p) in parents {
            if child == p {
                return Err(PosetError::TreeCycle(child));
            }
            if parent[child].replace(p).is_some() {
                return Err(PosetError::MultipleParents { node: child });
            }
        }
        // Every walk towards the root must terminate.
        let mut state = vec![0u8; nodes]; // 0 unvisited, 1 on path, 2 done
        for start in 0..nodes {
            let mut path = Vec::new();
            let mut cur = Some(start);
            while let Some(v) = cur {
                match state[v] {
                    2 => break,
                    1 => return Err(PosetError::TreeCycle(v)),
                    _ => {
                        state[v] = 1;
                        path.push(v);
                        cur = parent[v];
                    }
                }
            }
            for v in path {
                state[v] = 2;
            }
        }
        let node_of = assignment.iter().map(|&(_, n)| n).collect();
        Ok(Self {
            elements,
            index,
            structure: Structure::Tree { node_of, parent },
        })
    }

    /// Ordering generated by the edges `(lower, upper)`, closed transitively.
    pub fn dag(elements: &[ElementId], edges: &[(ElementId, ElementId)]) -> Result<Self, PosetError> {
        let index = index_elements(elements)?;
        let mut succ = vec![Vec::new(); elements.len()];
        for &(a, b) in edges {
            let ia = *index.get(&a).ok_or(PosetError::UnknownElement(a))?;
            let ib = *index.get(&b).ok_or(PosetError::UnknownElement(b))?;
            if ia == ib {
                return Err(PosetError::DagCycle);
            }
            succ[ia].push(ib);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let topo = topological_order(&succ).ok_or(PosetError::DagCycle)?;
        Ok(Self {
            elements: elements.to_vec(),
            index,
            structure: Structure::Dag { succ, topo },
        })
    }

    pub fn kind(&self) -> OrderKind {
        match self.structure {
            Structure::Group { .. } => OrderKind::Group,
            Structure::Total { .. } => OrderKind::Total,
            Structure::Tree { .. } => OrderKind::Tree,
            Structure::Dag { .. } => OrderKind::GenericDag,
        }
    }

    pub(crate) fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ElementId] {
        &self.elements
    }

    pub fn index_of(&self, e: ElementId) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.index.contains_key(&e)
    }

    /// Number of courses spanned by the elements (largest course index + 1).
    pub fn courses(&self) -> usize {
        self.elements.iter().map(|e| e.course + 1).max().unwrap_or(0)
    }

    /// Group count for group orderings.
    pub fn group_count(&self) -> Option<usize> {
        match self.structure {
            Structure::Group { groups, .. } => Some(groups),
            _ => None,
        }
    }

    /// Group index of element `idx` for group orderings.
    pub fn group_of(&self, idx: usize) -> Option<usize> {
        match &self.structure {
            Structure::Group { group_of, .. } => Some(group_of[idx]),
            _ => None,
        }
    }

    /// Rank of element `idx` for total orderings.
    pub fn rank_of(&self, idx: usize) -> Option<usize> {
        match &self.structure {
            Structure::Total { rank_of } => Some(rank_of[idx]),
            _ => None,
        }
    }

    /// Tree node of element `idx` for tree orderings.
    pub fn node_of(&self, idx: usize) -> Option<usize> {
        match &self.structure {
            Structure::Tree { node_of, .. } => Some(node_of[idx]),
            _ => None,
        }
    }

    /// Parent links of a tree ordering, indexed by node.
    pub fn tree_parents(&self) -> Option<&[Option<usize>]> {
        match &self.structure {
            Structure::Tree { parent, .. } => Some(parent),
            _ => None,
        }
    }

    /// Depth of every tree node (roots have depth 0).
    pub fn tree_depths(&self) -> Option<Vec<usize>> {
        let parent = self.tree_parents()?;
        Some(node_depths(parent))
    }

    /// Elements in ascending rank for total orderings.
    pub fn chain(&self) -> Option<Vec<usize>> {
        match &self.structure {
            Structure::Total { rank_of } => {
                let mut by_rank = vec![0; rank_of.len()];
                for (idx, &r) in rank_of.iter().enumerate() {
                    by_rank[r] = idx;
                }
                Some(by_rank)
            }
            _ => None,
        }
    }

    /// True when element `a` is constrained to be at most element `b`
    /// (strictly implied, `a != b`).
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        match &self.structure {
            Structure::Group { group_of, .. } => group_of[a] < group_of[b],
            Structure::Total { rank_of } => rank_of[a] < rank_of[b],
            Structure::Tree { node_of, parent } => {
                let target = node_of[a];
                let mut cur = parent[node_of[b]];
                while let Some(v) = cur {
                    if v == target {
                        return true;
                    }
                    cur = parent[v];
                }
                false
            }
            Structure::Dag { succ, .. } => {
                let mut seen = vec![false; succ.len()];
                let mut stack = vec![a];
                while let Some(u) = stack.pop() {
                    for &v in &succ[u] {
                        if v == b {
                            return true;
                        }
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
                false
            }
        }
    }

    /// Every implied constraint `(lower, upper)` as element positions.
    /// Quadratic in size for group orderings.
    pub fn implied_index_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        match &self.structure {
            Structure::Dag { succ, .. } => {
                for a in 0..n {
                    let mut seen = vec![false; n];
                    let mut stack = vec![a];
                    while let Some(u) = stack.pop() {
                        for &v in &succ[u] {
                            if !seen[v] {
                                seen[v] = true;
                                stack.push(v);
                            }
                        }
                    }
                    out.extend((0..n).filter(|&b| seen[b]).map(|b| (a, b)));
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        if self.precedes(a, b) {
                            out.push((a, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// Every implied constraint `(lower, upper)`.
    pub fn implied_pairs(&self) -> Vec<(ElementId, ElementId)> {
        self.implied_index_pairs()
            .into_iter()
            .map(|(a, b)| (self.elements[a], self.elements[b]))
            .collect()
    }

    /// The ordering induced on `keep`, with elements stored in exactly the
    /// given sequence (so position `i` of the result is `keep[i]`).
    ///
    /// Group, total and tree orderings restrict to the same kind. For
    /// generic orderings, paths through dropped elements become direct edges.
    pub fn restrict(&self, keep: &[ElementId]) -> Result<PartialOrder, PosetError> {
        let mut old_idx = Vec::with_capacity(keep.len());
        for &e in keep {
            old_idx.push(self.index_of(e).ok_or(PosetError::UnknownElement(e))?);
        }
        let index = index_elements(keep)?;
        let structure = match &self.structure {
            Structure::Group { group_of, groups } => Structure::Group {
                group_of: old_idx.iter().map(|&i| group_of[i]).collect(),
                groups: *groups,
            },
            Structure::Total { rank_of } => {
                let mut pos: Vec<usize> = (0..keep.len()).collect();
                pos.sort_by_key(|&p| rank_of[old_idx[p]]);
                let mut new_rank = vec![0; keep.len()];
                for (r, &p) in pos.iter().enumerate() {
                    new_rank[p] = r;
                }
                Structure::Total { rank_of: new_rank }
            }
            Structure::Tree { node_of, parent } => Structure::Tree {
                node_of: old_idx.iter().map(|&i| node_of[i]).collect(),
                parent: parent.clone(),
            },
            Structure::Dag { succ, .. } => {
                let mut new_of = vec![usize::MAX; self.len()];
                for (p, &i) in old_idx.iter().enumerate() {
                    new_of[i] = p;
                }
                let mut new_succ = vec![Vec::new(); keep.len()];
                for (p, &i) in old_idx.iter().enumerate() {
                    // Walk through dropped elements only.
                    let mut seen = vec![false; self.len()];
                    let mut stack = vec![i];
                    while let Some(u) = stack.pop() {
                        for &v in &succ[u] {
                            if seen[v] {
                                continue;
                            }
                            seen[v] = true;
                            if new_of[v] != usize::MAX {
                                new_succ[p].push(new_of[v]);
                            } else {
                                stack.push(v);
                            }
                        }
                    }
                    new_succ[p].sort_unstable();
                }
                let topo = topological_order(&new_succ).ok_or(PosetError::DagCycle)?;
                Structure::Dag {
                    succ: new_succ,
                    topo,
                }
            }
        };
        Ok(PartialOrder {
            elements: keep.to_vec(),
            index,
            structure,
        })
    }

    /// Largest violation `max(0, v[a] - v[b])` over all implied constraints,
    /// for values indexed by element position. Linear time for every kind.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let mut worst = 0.0f64;
        match &self.structure {
            Structure::Group { group_of, groups } => {
                let mut gmax = vec![f64::NEG_INFINITY; *groups];
                let mut gmin = vec![f64::INFINITY; *groups];
                for (i, &g) in group_of.iter().enumerate() {
                    gmax[g] = gmax[g].max(values[i]);
                    gmin[g] = gmin[g].min(values[i]);
                }
                let mut below = f64::NEG_INFINITY;
                for g in 0..*groups {
                    if gmin[g].is_finite() && below.is_finite() {
                        worst = worst.max(below - gmin[g]);
                    }
                    below = below.max(gmax[g]);
                }
            }
            Structure::Total { .. } => {
                let chain = self.chain().expect("total ordering");
                let mut below = f64::NEG_INFINITY;
                for &i in &chain {
                    if below.is_finite() {
                        worst = worst.max(below - values[i]);
                    }
                    below = below.max(values[i]);
                }
            }
            Structure::Tree { node_of, parent } => {
                let nodes = parent.len();
                let mut members = vec![Vec::new(); nodes];
                for (i, &nd) in node_of.iter().enumerate() {
                    members[nd].push(i);
                }
                let mut node_max = vec![f64::NEG_INFINITY; nodes];
                for (i, &nd) in node_of.iter().enumerate() {
                    node_max[nd] = node_max[nd].max(values[i]);
                }
                // Maximum over elements on proper ancestors of each node.
                let mut above_max = vec![f64::NEG_INFINITY; nodes];
                for v in tree_topological(parent) {
                    if let Some(p) = parent[v] {
                        above_max[v] = above_max[p].max(node_max[p]);
                    }
                    if above_max[v].is_finite() {
                        for &i in &members[v] {
                            worst = worst.max(above_max[v] - values[i]);
                        }
                    }
                }
            }
            Structure::Dag { succ, topo } => {
                let mut anc_max = vec![f64::NEG_INFINITY; succ.len()];
                for &u in topo {
                    if anc_max[u].is_finite() {
                        worst = worst.max(anc_max[u] - values[u]);
                    }
                    let carry = anc_max[u].max(values[u]);
                    for &v in &succ[u] {
                        anc_max[v] = anc_max[v].max(carry);
                    }
                }
            }
        }
        worst
    }

    /// Values of `matrix` at every element, by element position.
    pub fn gather(&self, matrix: &RatingMatrix) -> Result<Vec<f64>, PosetError> {
        self.elements
            .iter()
            .map(|&e| matrix.get(e).ok_or(PosetError::ShapeMismatch(e)))
            .collect()
    }
}

pub(crate) fn node_depths(parent: &[Option<usize>]) -> Vec<usize> {
    let mut depth = vec![0; parent.len()];
    for v in tree_topological(parent) {
        if let Some(p) = parent[v] {
            depth[v] = depth[p] + 1;
        }
    }
    depth
}

/// Nodes of a forest ordered so that parents precede children.
pub(crate) fn tree_topological(parent: &[Option<usize>]) -> Vec<usize> {
    let n = parent.len();
    let mut children = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    for (v, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(v),
            None => order.push(v),
        }
    }
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        order.extend(children[v].iter().copied());
    }
    order
}

pub(crate) fn tree_children(parent: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut children = vec![Vec::new(); parent.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(v);
        }
    }
    children
}

pub fn build_group_ordering(group_of: &[(ElementId, usize)], groups: usize) -> Result<PartialOrder, PosetError> {
    PartialOrder::group(group_of, groups)
}

pub fn build_total_ordering(ranked: &[ElementId]) -> Result<PartialOrder, PosetError> {
    PartialOrder::total(ranked)
}

pub fn build_tree_ordering(
    node_of: &[(ElementId, usize)],
    parents: &[(usize, usize)],
) -> Result<PartialOrder, PosetError> {
    PartialOrder::tree(node_of, parents)
}

pub fn build_dag_ordering(
    elements: &[ElementId],
    edges: &[(ElementId, ElementId)],
) -> Result<PartialOrder, PosetError> {
    PartialOrder::dag(elements, edges)
}

/// True iff `b[e] <= b[e'] + tol` for every implied constraint `(e, e')`.
pub fn satisfies(b: &RatingMatrix, order: &PartialOrder, tol: f64) -> Result<bool, PosetError> {
    let values = order.gather(b)?;
    Ok(order.max_violation(&values) <= tol)
}

/// Regularity summary of an ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub all_c_fraction: bool,
    pub single_c_fraction: bool,
    /// Only defined for total orderings.
    pub interleaving_points: Option<usize>,
}

/// Group-count table `ell[course][group]` of a group ordering. Total
/// orderings count as group orderings with one singleton group per rank.
pub(crate) fn group_counts(order: &PartialOrder) -> Option<Vec<Vec<usize>>> {
    let d = order.courses();
    match &order.structure {
        Structure::Group { group_of, groups } => {
            let mut ell = vec![vec![0usize; *groups]; d];
            for (i, e) in order.elements.iter().enumerate() {
                ell[e.course][group_of[i]] += 1;
            }
            Some(ell)
        }
        Structure::Total { rank_of } => {
            let mut ell = vec![vec![0usize; order.len()]; d];
            for (i, e) in order.elements.iter().enumerate() {
                ell[e.course][rank_of[i]] += 1;
            }
            Some(ell)
        }
        _ => None,
    }
}

/// Fraction conditions and interleaving count.
///
/// Course sizes are the number of ordering elements per course, so ragged
/// layouts are measured against their own course size.
pub fn classify(order: &PartialOrder, c: f64) -> Result<Classification, PosetError> {
    let ell = group_counts(order).ok_or(PosetError::NotGroupOrdering("fraction classification"))?;
    let sizes: Vec<f64> = ell.iter().map(|row| row.iter().sum::<usize>() as f64).collect();
    let groups = ell.first().map_or(0, Vec::len);
    // Counts are integers; absorb rounding in c * n.
    let slack = 1e-9;
    let all_c = ell
        .iter()
        .zip(&sizes)
        .all(|(row, &n)| row.iter().all(|&l| l as f64 >= c * n - slack));
    let single_c = (0..groups).any(|k| ell.iter().zip(&sizes).all(|(row, &n)| row[k] as f64 > c * n + slack));
    let interleaving_points = order.chain().map(|chain| {
        chain
            .windows(2)
            .filter(|w| order.elements[w[0]].course != order.elements[w[1]].course)
            .count()
    });
    Ok(Classification {
        all_c_fraction: all_c,
        single_c_fraction: single_c,
        interleaving_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(c: usize, s: usize) -> ElementId {
        ElementId::new(c, s)
    }

    #[test]
    fn two_element_group_chain() {
        let o = build_group_ordering(&[(e(0, 0), 0), (e(0, 1), 1)], 2).unwrap();
        assert_eq!(o.implied_pairs(), vec![(e(0, 0), e(0, 1))]);
    }

    #[test]
    fn single_group_is_vacuous() {
        let a: Vec<_> = (0..4).map(|s| (e(0, s), 0)).collect();
        let o = build_group_ordering(&a, 1).unwrap();
        assert!(o.implied_pairs().is_empty());
    }

    #[test]
    fn d2_n2_group_layout_has_four_pairs() {
        let a = [(e(0, 0), 0), (e(0, 1), 1), (e(1, 0), 0), (e(1, 1), 1)];
        let o = build_group_ordering(&a, 2).unwrap();
        let mut pairs = o.implied_pairs();
        pairs.sort();
        // Enumerated by hand: each group-0 element below each group-1 element.
        let mut want = vec![
            (e(0, 0), e(0, 1)),
            (e(0, 0), e(1, 1)),
            (e(1, 0), e(0, 1)),
            (e(1, 0), e(1, 1)),
        ];
        want.sort();
        assert_eq!(pairs, want);
    }

    #[test]
    fn group_errors() {
        assert_eq!(
            build_group_ordering(&[(e(0, 0), 2)], 2).unwrap_err(),
            PosetError::GroupOutOfRange {
                element: e(0, 0),
                group: 2,
                groups: 2
            }
        );
        assert_eq!(build_group_ordering(&[], 2).unwrap_err(), PosetError::Empty);
    }

    #[test]
    fn total_orders() {
        let o = build_total_ordering(&[e(0, 0), e(0, 1)]).unwrap();
        assert_eq!(o.implied_pairs(), vec![(e(0, 0), e(0, 1))]);
        assert!(matches!(
            build_total_ordering(&[e(0, 0), e(0, 0)]),
            Err(PosetError::DuplicateElement(_))
        ));
    }

    #[test]
    fn tree_three_nodes() {
        let o = build_tree_ordering(&[(e(0, 0), 0), (e(0, 1), 1), (e(1, 0), 2)], &[(1, 0), (2, 0)]).unwrap();
        assert_eq!(o.implied_pairs().len(), 2);
        assert!(matches!(
            build_tree_ordering(&[(e(0, 0), 0)], &[(0, 1), (1, 0)]),
            Err(PosetError::TreeCycle(_))
        ));
    }

    #[test]
    fn tree_constraints_follow_edges() {
        // Binary tree of three levels, two elements per node.
        let parents = [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2)];
        let assign: Vec<_> = (0..14).map(|i| (e(i % 3, i), i / 2)).collect();
        let o = build_tree_ordering(&assign, &parents).unwrap();
        let reduced = reduce_constraints(&o, &RatingMatrix::zeros(&[14, 14, 14])).unwrap();
        // Six edges, 2x2 element pairs each.
        assert_eq!(reduced.pairs.len(), 24);
        for (a, b) in &reduced.pairs {
            let na = o.node_of(o.index_of(*a).unwrap()).unwrap();
            let nb = o.node_of(o.index_of(*b).unwrap()).unwrap();
            assert!(parents.contains(&(nb, na)));
        }
    }

    #[test]
    fn dag_cycle_detected() {
        let els = [e(0, 0), e(0, 1)];
        assert_eq!(
            build_dag_ordering(&els, &[(els[0], els[1]), (els[1], els[0])]).unwrap_err(),
            PosetError::DagCycle
        );
    }

    #[test]
    fn satisfies_examples() {
        let a = [(e(0, 0), 0), (e(0, 1), 1), (e(1, 0), 0), (e(1, 1), 1)];
        let o = build_group_ordering(&a, 2).unwrap();
        let zero = RatingMatrix::zeros(&[2, 2]);
        assert!(satisfies(&zero, &o, 0.0).unwrap());
        let b = RatingMatrix::new(vec![vec![-2.5, 2.5], vec![-2.5, 2.5]]).unwrap();
        assert!(satisfies(&b, &o, 0.0).unwrap());

        let chain = build_total_ordering(&[e(0, 0), e(0, 1)]).unwrap();
        let bad = RatingMatrix::new(vec![vec![1.0, 0.0]]).unwrap();
        assert!(!satisfies(&bad, &chain, 0.0).unwrap());
        assert!(satisfies(&bad, &chain, 1.0).unwrap());

        let short = RatingMatrix::zeros(&[1]);
        assert_eq!(
            satisfies(&short, &chain, 0.0).unwrap_err(),
            PosetError::ShapeMismatch(e(0, 1))
        );
    }

    #[test]
    fn tolerance_does_not_accumulate_along_chains() {
        let chain = build_total_ordering(&[e(0, 0), e(0, 1), e(0, 2)]).unwrap();
        let b = RatingMatrix::new(vec![vec![0.0, -0.6, -1.2]]).unwrap();
        assert!(!satisfies(&b, &chain, 0.7).unwrap());
        assert!(satisfies(&b, &chain, 1.2).unwrap());
    }

    #[test]
    fn restrict_dag_keeps_paths() {
        let els = [e(0, 0), e(0, 1), e(0, 2)];
        let o = build_dag_ordering(&els, &[(els[0], els[1]), (els[1], els[2])]).unwrap();
        let r = o.restrict(&[els[2], els[0]]).unwrap();
        assert!(r.precedes(1, 0));
        assert!(!r.precedes(0, 1));
    }

    #[test]
    fn classify_examples() {
        let n = 10;
        let mut a = Vec::new();
        for c in 0..2 {
            for s in 0..n {
                a.push((e(c, s), usize::from(s >= n / 2)));
            }
        }
        let o = build_group_ordering(&a, 2).unwrap();
        assert!(classify(&o, 0.5).unwrap().all_c_fraction);

        // Binary layout (0.9n, 0.1n) / (0.1n, 0.9n).
        let mut a = Vec::new();
        for s in 0..n {
            a.push((e(0, s), usize::from(s >= 9)));
            a.push((e(1, s), usize::from(s >= 1)));
        }
        let o = build_group_ordering(&a, 2).unwrap();
        let c1 = classify(&o, 0.1).unwrap();
        assert!(c1.all_c_fraction);
        assert!(!classify(&o, 0.2).unwrap().all_c_fraction);
        assert_eq!(c1.interleaving_points, None);

        let inter = build_total_ordering(&[e(0, 0), e(1, 0), e(0, 1), e(1, 1)]).unwrap();
        let c = classify(&inter, 0.1).unwrap();
        assert_eq!(c.interleaving_points, Some(3));
        assert!(!c.all_c_fraction);

        let tree = build_tree_ordering(&[(e(0, 0), 0)], &[]).unwrap();
        assert!(classify(&tree, 0.1).is_err());
    }
}
