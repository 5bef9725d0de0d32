//! Euclidean projections used by projected gradient ascent.

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Default stopping tolerance for [`project_alternating`].
pub const ALTERNATING_TOL: f64 = 1e-12;
/// Default iteration cap for [`project_alternating`].
pub const ALTERNATING_MAX_ITER: usize = 10_000;

/// Projection onto the probability simplex `{p : p ≥ 0, Σ p = 1}`.
///
/// Sort-and-threshold: with `u` sorted descending, take the largest `k` with
/// `u_k − (Σ_{i≤k} u_i − 1)/k > 0`, set `τ = (Σ_{i≤k} u_i − 1)/k` and return
/// `max(v − τ, 0)`. `O(d log d)`. The result is rescaled once so that its sum
/// is one to working precision.
pub fn project_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    assert!(!v.is_empty(), "simplex projection of an empty vector");
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite input"));

    let mut cumsum = T::zero();
    let mut tau = T::zero();
    for (k, &uk) in u.iter().enumerate() {
        cumsum = cumsum + uk;
        let t = (cumsum - T::one()) / T::from_usize_lossy(k + 1);
        if uk - t > T::zero() {
            tau = t;
        }
    }

    let mut out: Vec<T> = v.iter().map(|&vi| (vi - tau).max(T::zero())).collect();
    let s = crate::scalar::csum(out.iter().copied());
    if s > T::zero() {
        for o in &mut out {
            *o = *o / s;
        }
    }
    out
}

/// Coordinatewise clamp to `[lower_l, upper_l]`.
pub fn project_box<T: Scalar>(v: &[T], lower: &[T], upper: &[T]) -> Vec<T> {
    v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
        .collect()
}

/// Radial projection onto the closed ball `B_center(radius)`.
pub fn project_ball<T: Scalar>(v: &[T], center: &[T], radius: T) -> Vec<T> {
    let dist = v
        .iter()
        .zip(center)
        .map(|(&a, &c)| (a - c) * (a - c))
        .fold(T::zero(), |a, b| a + b)
        .sqrt();
    if dist <= radius {
        return v.to_vec();
    }
    let scale = radius / dist;
    v.iter()
        .zip(center)
        .map(|(&a, &c)| c + (a - c) * scale)
        .collect()
}

/// Convex set with an exact Euclidean projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionTarget<T> {
    Simplex,
    Box { lower: Vec<T>, upper: Vec<T> },
    Ball { center: Vec<T>, radius: T },
    Intersection { targets: Vec<ProjectionTarget<T>> },
}

impl<T: Scalar> ProjectionTarget<T> {
    pub fn project(&self, v: &[T]) -> Vec<T> {
        match self {
            Self::Simplex => project_simplex(v),
            Self::Box { lower, upper } => project_box(v, lower, upper),
            Self::Ball { center, radius } => project_ball(v, center, *radius),
            Self::Intersection { targets } => {
                project_alternating(v, targets, ALTERNATING_MAX_ITER, T::lit(ALTERNATING_TOL)).point
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingOutcome<T> {
    pub point: Vec<T>,
    pub converged: bool,
    /// Sweeps through the target list that moved the iterate by at least `tol`.
    pub moves: usize,
}

/// Cyclic alternating projections onto `targets`.
///
/// Sweeps through the targets in order until a full sweep moves the iterate by
/// less than `tol` (Euclidean). With one target this is the exact projection.
/// Returns the last iterate, flagged non-converged when `max_iter` sweeps were
/// used up.
pub fn project_alternating<T: Scalar>(
    v: &[T],
    targets: &[ProjectionTarget<T>],
    max_iter: usize,
    tol: T,
) -> AlternatingOutcome<T> {
    let mut x = v.to_vec();
    for sweep in 0..max_iter {
        let start = x.clone();
        for t in targets {
            x = t.project(&x);
        }
        let moved = start
            .iter()
            .zip(&x)
            .map(|(&a, &b)| (a - b) * (a - b))
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        if moved < tol {
            return AlternatingOutcome {
                point: x,
                converged: true,
                moves: sweep,
            };
        }
    }
    AlternatingOutcome {
        point: x,
        converged: false,
        moves: max_iter,
    }
}
