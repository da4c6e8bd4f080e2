#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rating_debias::datamodel::{ObservationSet, RatingMatrix};
use rating_debias::poset::{
    build_dag_ordering, build_group_ordering, build_total_ordering, build_tree_ordering, ElementId, PartialOrder,
};

/// Random small instance: ordering over `sizes`, full observation set, and
/// ratings drawn uniformly from [-3, 3].
pub struct Instance {
    pub order: PartialOrder,
    pub omega: ObservationSet,
    pub y: RatingMatrix,
}

pub fn elements(sizes: &[usize]) -> Vec<ElementId> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..n).map(move |s| ElementId::new(i, s)))
        .collect()
}

pub fn random_order<R: Rng>(kind: usize, sizes: &[usize], rng: &mut R) -> PartialOrder {
    let els = elements(sizes);
    match kind % 4 {
        0 => {
            let r = rng.random_range(1..=4);
            let a: Vec<_> = els.iter().map(|&e| (e, rng.random_range(0..r))).collect();
            build_group_ordering(&a, r).unwrap()
        }
        1 => {
            let mut ranked = els.clone();
            ranked.shuffle(rng);
            build_total_ordering(&ranked).unwrap()
        }
        2 => {
            let nodes = rng.random_range(1..=5);
            let parents: Vec<(usize, usize)> = (1..nodes).map(|v| (v, rng.random_range(0..v))).collect();
            let a: Vec<_> = els.iter().map(|&e| (e, rng.random_range(0..nodes))).collect();
            build_tree_ordering(&a, &parents).unwrap()
        }
        _ => {
            let mut perm = els.clone();
            perm.shuffle(rng);
            let mut edges = Vec::new();
            for a in 0..perm.len() {
                for b in a + 1..perm.len() {
                    if rng.random_bool(0.15) {
                        edges.push((perm[a], perm[b]));
                    }
                }
            }
            build_dag_ordering(&els, &edges).unwrap()
        }
    }
}

pub fn random_instance<R: Rng>(kind: usize, max_d: usize, max_n: usize, rng: &mut R) -> Instance {
    let d = rng.random_range(1..=max_d);
    let sizes: Vec<usize> = (0..d).map(|_| rng.random_range(1..=max_n)).collect();
    let order = random_order(kind, &sizes, rng);
    let omega = ObservationSet::full(&sizes).unwrap();
    let rows = sizes
        .iter()
        .map(|&n| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    Instance {
        order,
        omega,
        y: RatingMatrix::new(rows).unwrap(),
    }
}
