use rand::seq::SliceRandom;
use rand::Rng;

use super::{tree_children, tree_topological, ElementId, PartialOrder, Structure};

/// A linear extension: every element, lowest bias rank first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalOrder {
    pub ranked: Vec<ElementId>,
}

impl TotalOrder {
    /// Rank of every element of `order`, by element position.
    pub fn positions(&self, order: &PartialOrder) -> Option<Vec<usize>> {
        if self.ranked.len() != order.len() {
            return None;
        }
        let mut pos = vec![usize::MAX; order.len()];
        for (r, e) in self.ranked.iter().enumerate() {
            let i = order.index_of(*e)?;
            if pos[i] != usize::MAX {
                return None;
            }
            pos[i] = r;
        }
        Some(pos)
    }

    /// True when this is a permutation of `order`'s elements respecting every
    /// implied constraint.
    pub fn is_consistent_with(&self, order: &PartialOrder) -> bool {
        let Some(pos) = self.positions(order) else {
            return false;
        };
        // A rank vector respects the order iff it has no violations.
        let as_f64: Vec<f64> = pos.iter().map(|&p| p as f64).collect();
        order.max_violation(&as_f64) <= 0.0
    }
}

/// Draw a linear extension of `order`.
///
/// Group, total and tree orderings are sampled exactly uniformly. Generic
/// orderings use a random topological sort (uniform choice among the
/// currently available minimal elements), which always yields a valid
/// extension but is only approximately uniform.
pub fn sample_linear_extension<R: Rng + ?Sized>(order: &PartialOrder, rng: &mut R) -> TotalOrder {
    let idx = sample_extension_indices(order, rng);
    TotalOrder {
        ranked: idx.into_iter().map(|i| order.elements()[i]).collect(),
    }
}

/// Same as [`sample_linear_extension`], returning element positions.
pub(crate) fn sample_extension_indices<R: Rng + ?Sized>(order: &PartialOrder, rng: &mut R) -> Vec<usize> {
    match order.structure() {
        Structure::Total { .. } => order.chain().expect("total ordering"),
        Structure::Group { group_of, groups } => {
            let mut buckets = vec![Vec::new(); *groups];
            for (i, &g) in group_of.iter().enumerate() {
                buckets[g].push(i);
            }
            let mut out = Vec::with_capacity(order.len());
            for mut b in buckets {
                b.shuffle(rng);
                out.extend(b);
            }
            out
        }
        Structure::Tree { node_of, parent } => sample_tree(node_of, parent, rng),
        Structure::Dag { succ, .. } => {
            let n = succ.len();
            let mut indeg = vec![0usize; n];
            for s in succ {
                for &v in s {
                    indeg[v] += 1;
                }
            }
            let mut avail: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
            let mut out = Vec::with_capacity(n);
            while !avail.is_empty() {
                let k = rng.random_range(0..avail.len());
                let u = avail.swap_remove(k);
                out.push(u);
                for &v in &succ[u] {
                    indeg[v] -= 1;
                    if indeg[v] == 0 {
                        avail.push(v);
                    }
                }
            }
            out
        }
    }
}

/// Root elements first in random order, then the remaining positions handed
/// to child subtrees uniformly at random, recursively.
fn sample_tree<R: Rng + ?Sized>(node_of: &[usize], parent: &[Option<usize>], rng: &mut R) -> Vec<usize> {
    let nodes = parent.len();
    let children = tree_children(parent);
    let mut members = vec![Vec::new(); nodes];
    for (i, &nd) in node_of.iter().enumerate() {
        members[nd].push(i);
    }
    // Subtree sizes, children before parents.
    let order = tree_topological(parent);
    let mut size = vec![0usize; nodes];
    for &v in order.iter().rev() {
        size[v] = members[v].len() + children[v].iter().map(|&c| size[c]).sum::<usize>();
    }
    let roots: Vec<usize> = (0..nodes).filter(|&v| parent[v].is_none()).collect();
    let mut out = Vec::with_capacity(node_of.len());
    interleave_subtrees(&roots, &members, &children, &size, rng, &mut out);
    out
}

/// Random interleaving of independently sampled subtree sequences: every
/// assignment of positions to subtrees is equally likely.
fn interleave_subtrees<R: Rng + ?Sized>(
    subtrees: &[usize],
    members: &[Vec<usize>],
    children: &[Vec<usize>],
    size: &[usize],
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    let mut labels: Vec<usize> = subtrees
        .iter()
        .enumerate()
        .flat_map(|(k, &v)| std::iter::repeat_n(k, size[v]))
        .collect();
    labels.shuffle(rng);
    let seqs: Vec<Vec<usize>> = subtrees
        .iter()
        .map(|&v| {
            let mut seq = Vec::with_capacity(size[v]);
            sample_subtree(v, members, children, size, rng, &mut seq);
            seq
        })
        .collect();
    let mut cursor = vec![0usize; seqs.len()];
    for k in labels {
        out.push(seqs[k][cursor[k]]);
        cursor[k] += 1;
    }
}

fn sample_subtree<R: Rng + ?Sized>(
    v: usize,
    members: &[Vec<usize>],
    children: &[Vec<usize>],
    size: &[usize],
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    let mut own = members[v].clone();
    own.shuffle(rng);
    out.extend(own);
    interleave_subtrees(&children[v], members, children, size, rng, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{build_dag_ordering, build_group_ordering, build_total_ordering, build_tree_ordering};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn e(c: usize, s: usize) -> ElementId {
        ElementId::new(c, s)
    }

    #[test]
    fn total_is_identity() {
        let ranked = vec![e(1, 0), e(0, 0), e(0, 1)];
        let o = build_total_ordering(&ranked).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_linear_extension(&o, &mut rng).ranked, ranked);
        }
    }

    #[test]
    fn group_of_singletons_is_unique() {
        let o = build_group_ordering(&[(e(0, 0), 1), (e(1, 0), 0)], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sample_linear_extension(&o, &mut rng).ranked, vec![e(1, 0), e(0, 0)]);
    }

    #[test]
    fn one_group_of_three_is_uniform() {
        let o = build_group_ordering(&[(e(0, 0), 0), (e(0, 1), 0), (e(0, 2), 0)], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 60_000;
        let mut counts: HashMap<Vec<ElementId>, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_linear_extension(&o, &mut rng).ranked).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sd, "count {c}");
        }
    }

    #[test]
    fn tree_sampler_is_uniform_on_small_tree() {
        // Root with one element, two leaves with one element each: the two
        // leaf elements are unordered, so both extensions have mass 1/2.
        // A second element on the left leaf makes 3 extensions.
        let o = build_tree_ordering(&[(e(0, 0), 0), (e(0, 1), 1), (e(0, 2), 1), (e(1, 0), 2)], &[(1, 0), (2, 0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts: HashMap<Vec<ElementId>, usize> = HashMap::new();
        let draws = 30_000;
        for _ in 0..draws {
            let t = sample_linear_extension(&o, &mut rng);
            assert!(t.is_consistent_with(&o));
            *counts.entry(t.ranked).or_default() += 1;
        }
        // Extensions: root first, then one of 3!/(1!2!)*2 = 6 interleavings
        // (the two left-leaf elements are unordered among themselves).
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn every_kind_yields_consistent_extensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let group: Vec<_> = (0..12).map(|i| (e(i % 3, i), i % 4)).collect();
        let tree: Vec<_> = (0..14).map(|i| (e(i % 2, i), i / 2)).collect();
        let parents = [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2)];
        let els: Vec<_> = (0..8).map(|i| e(0, i)).collect();
        let edges = [(els[0], els[3]), (els[1], els[3]), (els[3], els[5]), (els[2], els[7]), (els[6], els[7])];
        let orders = [
            build_group_ordering(&group, 4).unwrap(),
            build_total_ordering(&els).unwrap(),
            build_tree_ordering(&tree, &parents).unwrap(),
            build_dag_ordering(&els, &edges).unwrap(),
        ];
        for o in &orders {
            for _ in 0..1000 {
                assert!(sample_linear_extension(o, &mut rng).is_consistent_with(o));
            }
        }
    }
}
