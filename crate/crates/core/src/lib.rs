//! Ordering-constrained bias correction for ratings.
//!
//! Ratings are modeled as `y = x[course] + b + z`: a per-course quality, a
//! bias term constrained by a known partial ordering, and noise. The
//! [`estimator`] solves a regularized least-squares problem jointly in
//! qualities and biases; [`crossval`] picks the regularization weight;
//! [`baselines`] holds reference estimators and [`harness`] runs seeded
//! simulation studies.

pub mod baselines;
pub mod crossval;
pub mod datamodel;
pub mod estimator;
pub mod harness;
pub mod isotonic;
pub mod poset;
