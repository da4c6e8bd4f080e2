use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{check_scale, DataError, ObservationSet, QualityVector, RatingMatrix};
use crate::poset::sample::sample_extension_indices;
use crate::poset::{PartialOrder, PosetError};

/// Ordered Gaussian bias: draw `|omega|` values from `N(0, sigma^2)`, sort
/// them, and hand them out along a random linear extension of the ordering
/// restricted to `omega`.
pub fn generate_bias<R: Rng + ?Sized>(
    order: &PartialOrder,
    omega: &ObservationSet,
    sigma: f64,
    rng: &mut R,
) -> Result<RatingMatrix, DataError> {
    check_scale("sigma", sigma)?;
    let sub = order.restrict(&omega.elements())?;
    let normal = Normal::new(0.0, sigma).expect("validated scale");
    let mut values: Vec<f64> = (0..omega.len()).map(|_| normal.sample(rng)).collect();
    values.sort_by(f64::total_cmp);
    let ranked = sample_extension_indices(&sub, rng);
    let mut flat = vec![0.0; omega.len()];
    for (v, &i) in values.into_iter().zip(&ranked) {
        flat[i] = v;
    }
    Ok(RatingMatrix::scatter(omega, &omega.shape(), &flat))
}

/// Bias drawn independently per element from `Unif[k - r/2, k + 1 - r/2]`
/// for an element in group `k` of an `r`-group ordering. With two groups
/// these are `Unif[-1, 0]` and `Unif[0, 1]`.
pub fn generate_uniform_group_bias<R: Rng + ?Sized>(
    order: &PartialOrder,
    omega: &ObservationSet,
    rng: &mut R,
) -> Result<RatingMatrix, DataError> {
    let sub = order.restrict(&omega.elements())?;
    let r = sub
        .group_count()
        .ok_or(PosetError::NotGroupOrdering("uniform group bias"))? as f64;
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let flat: Vec<f64> = (0..sub.len())
        .map(|i| {
            let k = sub.group_of(i).expect("group ordering") as f64;
            k - r / 2.0 + unit.sample(rng)
        })
        .collect();
    Ok(RatingMatrix::scatter(omega, &omega.shape(), &flat))
}

/// Independent `N(0, eta^2)` noise on every cell of `omega`.
pub fn generate_noise<R: Rng + ?Sized>(omega: &ObservationSet, eta: f64, rng: &mut R) -> Result<RatingMatrix, DataError> {
    check_scale("eta", eta)?;
    let normal = Normal::new(0.0, eta).expect("validated scale");
    let flat: Vec<f64> = (0..omega.len()).map(|_| normal.sample(rng)).collect();
    Ok(RatingMatrix::scatter(omega, &omega.shape(), &flat))
}

/// `y = x_star[course] + b + z`, cellwise.
pub fn synthesize(x_star: &QualityVector, b: &RatingMatrix, z: &RatingMatrix) -> Result<RatingMatrix, DataError> {
    if b.shape() != z.shape() {
        return Err(DataError::ShapeMismatch(format!("{:?} vs {:?}", b.shape(), z.shape())));
    }
    if b.rows().len() != x_star.len() {
        return Err(DataError::LengthMismatch {
            left: x_star.len(),
            right: b.rows().len(),
        });
    }
    let rows = b
        .rows()
        .iter()
        .zip(z.rows())
        .zip(&x_star.0)
        .map(|((br, zr), &x)| br.iter().zip(zr).map(|(b, z)| x + b + z).collect())
        .collect();
    RatingMatrix::new(rows)
}
