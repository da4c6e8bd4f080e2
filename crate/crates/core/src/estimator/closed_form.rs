use super::FitError;
use crate::datamodel::{ObservationSet, QualityVector, RatingMatrix};
use crate::poset::PartialOrder;

/// Closed-form `lambda = 0` solution for two courses and a two-group
/// ordering when the data carry no noise.
///
/// With `gap` the difference of course means, the shift between the two
/// courses is
/// * `min y(course 2, group 2) - max y(course 1, group 1)` if that is below `gap`,
/// * else `max y(course 2, group 1) - min y(course 1, group 2)` if that is above `gap`,
/// * else `gap`.
///
/// A branch whose extremes do not exist is skipped. The level is fixed by
/// `n_1 x_1 + n_2 x_2 = sum y`, which for equal sizes is the grand mean
/// plus or minus half the shift.
pub fn closed_form_d2r2(y: &RatingMatrix, order: &PartialOrder, omega: &ObservationSet) -> Result<QualityVector, FitError> {
    if omega.courses() != 2 {
        return Err(FitError::ClosedFormShape(format!("{} courses", omega.courses())));
    }
    let sub = order.restrict(&omega.elements())?;
    match sub.group_count() {
        Some(2) => {}
        Some(r) => return Err(FitError::ClosedFormShape(format!("{r} groups"))),
        None => return Err(FitError::ClosedFormShape(format!("{} ordering", sub.kind()))),
    }
    let yv = y.gather(omega)?;
    let course = omega.course_of_flat();
    let mut hi = [[f64::NEG_INFINITY; 2]; 2];
    let mut lo = [[f64::INFINITY; 2]; 2];
    let mut sum = [0.0; 2];
    let mut n = [0.0; 2];
    for (e, &v) in yv.iter().enumerate() {
        let (i, g) = (course[e], sub.group_of(e).expect("group ordering"));
        hi[i][g] = hi[i][g].max(v);
        lo[i][g] = lo[i][g].min(v);
        sum[i] += v;
        n[i] += 1.0;
    }
    let gap = sum[1] / n[1] - sum[0] / n[0];
    let upper = lo[1][1] - hi[0][0];
    let lower = hi[1][0] - lo[0][1];
    let gamma = if upper.is_finite() && upper < gap {
        upper
    } else if lower.is_finite() && lower > gap {
        lower
    } else {
        gap
    };
    let total = sum[0] + sum[1];
    let x1 = (total - n[1] * gamma) / (n[0] + n[1]);
    Ok(QualityVector(vec![x1, x1 + gamma]))
}
