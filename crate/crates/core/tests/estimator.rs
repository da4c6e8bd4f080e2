mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rating_debias::datamodel::{ObservationSet, RatingMatrix};
use rating_debias::estimator::{closed_form_d2r2, fit, objective, FitError, Lambda};
use rating_debias::isotonic::qp_oracle;
use rating_debias::poset::{build_group_ordering, build_total_ordering, satisfies, ElementId, PartialOrder};

fn e(c: usize, s: usize) -> ElementId {
    ElementId::new(c, s)
}

fn matrix(rows: &[&[f64]]) -> RatingMatrix {
    RatingMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

/// Two courses of two cells; `groups[i][j]` is the group of cell (i, j).
fn two_by_two(groups: [[usize; 2]; 2]) -> PartialOrder {
    let a: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |j| (e(i, j), groups[i][j]))).collect();
    build_group_ordering(&a, 2).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn infinite_weight_gives_row_means() {
    let y = matrix(&[&[1.0, 3.0], &[2.0, 4.0]]);
    let omega = ObservationSet::full(&[2, 2]).unwrap();
    let s = fit(&y, &two_by_two([[0, 1], [0, 1]]), Lambda::Infinity, &omega).unwrap();
    assert_eq!(s.x_hat.0, vec![2.0, 3.0]);
    assert!(s.b_hat.rows().iter().flatten().all(|&b| b == 0.0));
}

#[test]
fn course_level_groups_need_no_bias() {
    let y = matrix(&[&[-1.0, -1.0], &[1.0, 1.0]]);
    let omega = ObservationSet::full(&[2, 2]).unwrap();
    let order = two_by_two([[0, 0], [1, 1]]);
    let s = fit(&y, &order, Lambda::Finite(0.0), &omega).unwrap();
    assert!(close(&s.x_hat.0, &[-1.0, 1.0], 1e-9));
    assert!(s.b_hat.rows().iter().flatten().all(|b| b.abs() <= 1e-9));
    assert!(close(&closed_form_d2r2(&y, &order, &omega).unwrap().0, &[-1.0, 1.0], 1e-12));
}

#[test]
fn row_means_with_per_course_groups() {
    let y = matrix(&[&[0.0, 10.0], &[1.0, 3.0]]);
    let omega = ObservationSet::full(&[2, 2]).unwrap();
    let order = two_by_two([[0, 1], [0, 1]]);
    let s = fit(&y, &order, Lambda::Finite(0.0), &omega).unwrap();
    assert!(close(&s.x_hat.0, &[5.0, 2.0], 1e-9));
    assert!(close(s.b_hat.row(0), &[-5.0, 5.0], 1e-9));
    assert!(close(s.b_hat.row(1), &[-1.0, 1.0], 1e-9));
    assert!(satisfies(&s.b_hat, &order, 1e-12).unwrap());
    assert!(close(&closed_form_d2r2(&y, &order, &omega).unwrap().0, &[5.0, 2.0], 1e-12));
}

#[test]
fn closed_form_neither_branch() {
    let y = matrix(&[&[0.0, 5.0], &[0.0, 5.0]]);
    let omega = ObservationSet::full(&[2, 2]).unwrap();
    let order = two_by_two([[0, 1], [0, 1]]);
    assert!(close(&closed_form_d2r2(&y, &order, &omega).unwrap().0, &[2.5, 2.5], 1e-12));
    let s = fit(&y, &order, Lambda::Finite(0.0), &omega).unwrap();
    assert!(close(&s.x_hat.0, &[2.5, 2.5], 1e-9));
}

#[test]
fn one_cell_per_course_is_explained_by_quality() {
    let y = matrix(&[&[4.0], &[-2.0], &[7.5]]);
    let omega = ObservationSet::full(&[1, 1, 1]).unwrap();
    let order = build_total_ordering(&[e(0, 0), e(1, 0), e(2, 0)]).unwrap();
    for l in [Lambda::Finite(0.0), Lambda::Finite(1.0), Lambda::Infinity] {
        let s = fit(&y, &order, l, &omega).unwrap();
        assert!(close(&s.x_hat.0, &[4.0, -2.0, 7.5], 1e-9), "{l}");
        assert!(s.b_hat.rows().iter().flatten().all(|b| b.abs() <= 1e-9));
    }
}

#[test]
fn constant_courses_give_zero_bias() {
    // Each course constant, so B = 0 fits exactly and is the smallest bias.
    let y = matrix(&[&[3.0, 3.0, 3.0], &[-1.0, -1.0]]);
    let omega = ObservationSet::full(&[3, 2]).unwrap();
    let order = build_total_ordering(&[e(1, 0), e(0, 0), e(1, 1), e(0, 1), e(0, 2)]).unwrap();
    for l in [0.0, 0.5, 4.0] {
        let s = fit(&y, &order, Lambda::Finite(l), &omega).unwrap();
        assert!(close(&s.x_hat.0, &[3.0, -1.0], 1e-9));
        assert!(s.b_hat.rows().iter().flatten().all(|b| b.abs() <= 1e-9));
    }
}

#[test]
fn huge_weight_approaches_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..40 {
        let inst = common::random_instance(k, 4, 8, &mut rng);
        let big = fit(&inst.y, &inst.order, Lambda::Finite(1e9), &inst.omega).unwrap();
        let inf = fit(&inst.y, &inst.order, Lambda::Infinity, &inst.omega).unwrap();
        assert!(close(&big.x_hat.0, &inf.x_hat.0, 1e-6), "instance {k}");
    }
}

#[test]
fn bias_norm_shrinks_along_the_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = Lambda::default_grid();
    for k in 0..40 {
        let inst = common::random_instance(k, 4, 8, &mut rng);
        let norms: Vec<f64> = grid
            .iter()
            .map(|&l| fit(&inst.y, &inst.order, l, &inst.omega).unwrap().b_hat.sq_norm(&inst.omega).unwrap())
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]), "instance {k}: {norms:?}");
        }
    }
}

#[test]
fn matches_reference_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let weights = [0.0, 0.1, 1.0, 10.0];
    for k in 0..80 {
        let inst = common::random_instance(k, 3, 8, &mut rng);
        let l = Lambda::Finite(weights[k % weights.len()]);
        let s = fit(&inst.y, &inst.order, l, &inst.omega).unwrap();
        let o = qp_oracle(&inst.y, &inst.order, l, &inst.omega).unwrap();
        assert!(close(&s.x_hat.0, &o.x.0, 1e-5), "instance {k} at {l}: {:?} vs {:?}", s.x_hat, o.x);
        let via_fn = objective(&inst.y, &s.x_hat, &s.b_hat, l, &inst.omega).unwrap();
        assert!((via_fn - s.diagnostics.objective).abs() <= 1e-9 * (1.0 + via_fn));
        assert!((via_fn - o.objective).abs() <= 1e-7 * (1.0 + via_fn));
    }
}

#[test]
fn partial_observation_and_errors() {
    let y = matrix(&[&[1.0, 2.0, 100.0], &[0.0, 5.0]]);
    let omega = ObservationSet::new(vec![vec![0, 1], vec![0, 1]]).unwrap();
    let order = two_by_two([[0, 1], [0, 1]]);
    let s = fit(&y, &order, Lambda::Finite(0.0), &omega).unwrap();
    // The unobserved cell (0, 2) neither influences the fit nor gets a bias.
    assert!(close(&s.x_hat.0, &[1.5, 2.5], 1e-9));
    assert_eq!(s.b_hat.row(0)[2], 0.0);

    assert!(matches!(
        fit(&y, &order, Lambda::Finite(-1.0), &omega),
        Err(FitError::InvalidLambda(_))
    ));
    assert!("-2".parse::<Lambda>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shifting_a_course_shifts_only_its_quality(seed in any::<u64>(), kind in 0usize..4, li in 0usize..4, shift in -20.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(kind, 3, 6, &mut rng);
        let target = rng.random_range(0..inst.omega.courses());
        let rows: Vec<Vec<f64>> = inst.y.rows().iter().enumerate()
            .map(|(i, r)| r.iter().map(|v| if i == target { v + shift } else { *v }).collect())
            .collect();
        let moved = RatingMatrix::new(rows).unwrap();
        let l = [Lambda::Finite(0.0), Lambda::Finite(0.3), Lambda::Finite(5.0), Lambda::Infinity][li];
        let a = fit(&inst.y, &inst.order, l, &inst.omega).unwrap();
        let b = fit(&moved, &inst.order, l, &inst.omega).unwrap();
        for (i, (p, q)) in a.x_hat.0.iter().zip(&b.x_hat.0).enumerate() {
            let expect = if i == target { shift } else { 0.0 };
            prop_assert!((q - p - expect).abs() <= 1e-7, "course {} moved {} not {}", i, q - p, expect);
        }
        let ba = a.b_hat.gather(&inst.omega).unwrap();
        let bb = b.b_hat.gather(&inst.omega).unwrap();
        prop_assert!(close(&ba, &bb, 1e-7));
    }

    #[test]
    fn fits_are_feasible_and_balanced(seed in any::<u64>(), kind in 0usize..4, li in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(kind, 4, 7, &mut rng);
        let l = [Lambda::Finite(0.0), Lambda::Finite(0.3), Lambda::Finite(5.0), Lambda::Infinity][li];
        let s = fit(&inst.y, &inst.order, l, &inst.omega).unwrap();
        prop_assert!(satisfies(&s.b_hat, &inst.order, 1e-8).unwrap());
        prop_assert!(s.diagnostics.converged);
        let total_b: f64 = s.b_hat.gather(&inst.omega).unwrap().iter().sum();
        prop_assert!(total_b.abs() <= 1e-8);
    }
}
