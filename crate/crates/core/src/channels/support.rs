use serde::{Deserialize, Serialize};

use crate::projection::{
    project_alternating, project_ball, project_box, ProjectionTarget, ALTERNATING_MAX_ITER,
    ALTERNATING_TOL,
};
use crate::{Error, Result, Scalar};

/// Input support `Ω`: a box, a closed ball, or their intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportSet<T> {
    Box {
        lower: Vec<T>,
        upper: Vec<T>,
    },
    Ball {
        center: Vec<T>,
        radius: T,
    },
    Intersection {
        lower: Vec<T>,
        upper: Vec<T>,
        center: Vec<T>,
        radius: T,
    },
}

impl<T: Scalar> SupportSet<T> {
    /// `[lo, hi]` in one dimension.
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        Self::boxed(vec![lo], vec![hi])
    }

    /// `[a_1, b_1] × … × [a_n, b_n]`. Degenerate sides (`a_l = b_l`) are allowed.
    pub fn boxed(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        check_box(&lower, &upper)?;
        Ok(Self::Box { lower, upper })
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        check_ball(&center, radius)?;
        Ok(Self::Ball { center, radius })
    }

    /// Box ∩ ball. Fails when alternating projections started at the center do
    /// not find a common point.
    pub fn intersection(lower: Vec<T>, upper: Vec<T>, center: Vec<T>, radius: T) -> Result<Self> {
        check_box(&lower, &upper)?;
        check_ball(&center, radius)?;
        if lower.len() != center.len() {
            return Err(Error::DimensionMismatch(format!(
                "box has dimension {}, ball has {}",
                lower.len(),
                center.len()
            )));
        }
        let set = Self::Intersection {
            lower,
            upper,
            center,
            radius,
        };
        let SupportSet::Intersection { center, .. } = &set else {
            unreachable!()
        };
        let witness = project_alternating(
            center,
            &set.targets(),
            ALTERNATING_MAX_ITER,
            T::lit(ALTERNATING_TOL),
        );
        if !witness.converged || !set.contains(&witness.point, T::tol(1e-9)) {
            return Err(Error::Infeasible("box and ball do not intersect".into()));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } | Self::Intersection { lower, .. } => lower.len(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    fn targets(&self) -> Vec<ProjectionTarget<T>> {
        match self {
            Self::Box { lower, upper } => vec![ProjectionTarget::Box {
                lower: lower.clone(),
                upper: upper.clone(),
            }],
            Self::Ball { center, radius } => vec![ProjectionTarget::Ball {
                center: center.clone(),
                radius: *radius,
            }],
            Self::Intersection {
                lower,
                upper,
                center,
                radius,
            } => vec![
                ProjectionTarget::Box {
                    lower: lower.clone(),
                    upper: upper.clone(),
                },
                ProjectionTarget::Ball {
                    center: center.clone(),
                    radius: *radius,
                },
            ],
        }
    }

    /// Membership with slack `tol` (box sides and ball radius).
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let in_box = |lower: &[T], upper: &[T]| {
            x.iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
        };
        let in_ball = |center: &[T], radius: T| {
            let d2 = x
                .iter()
                .zip(center)
                .map(|(&a, &c)| (a - c) * (a - c))
                .fold(T::zero(), |a, b| a + b);
            d2.sqrt() <= radius + tol
        };
        match self {
            Self::Box { lower, upper } => in_box(lower, upper),
            Self::Ball { center, radius } => in_ball(center, *radius),
            Self::Intersection {
                lower,
                upper,
                center,
                radius,
            } => in_box(lower, upper) && in_ball(center, *radius),
        }
    }

    /// Euclidean projection (alternating projections for the intersection).
    pub fn project(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Box { lower, upper } => project_box(x, lower, upper),
            Self::Ball { center, radius } => project_ball(x, center, *radius),
            Self::Intersection { .. } => {
                let out = project_alternating(
                    x,
                    &self.targets(),
                    ALTERNATING_MAX_ITER,
                    T::lit(ALTERNATING_TOL),
                );
                // Finish on the box so coordinates are clamped exactly.
                let Self::Intersection { lower, upper, .. } = self else {
                    unreachable!()
                };
                project_box(&out.point, lower, upper)
            }
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            Self::Box { lower, upper } => (lower.clone(), upper.clone()),
            Self::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            Self::Intersection {
                lower,
                upper,
                center,
                radius,
            } => (
                lower
                    .iter()
                    .zip(center)
                    .map(|(&lo, &c)| lo.max(c - *radius))
                    .collect(),
                upper
                    .iter()
                    .zip(center)
                    .map(|(&hi, &c)| hi.min(c + *radius))
                    .collect(),
            ),
        }
    }

    /// Diameter of the bounding box (exact for boxes, `2r` for balls).
    pub fn diameter(&self) -> T {
        match self {
            Self::Ball { radius, .. } => *radius + *radius,
            _ => {
                let (lo, hi) = self.bounding_box();
                lo.iter()
                    .zip(&hi)
                    .map(|(&a, &b)| (b - a) * (b - a))
                    .fold(T::zero(), |a, b| a + b)
                    .sqrt()
            }
        }
    }

    /// The box sides, if this set is a plain box.
    pub fn as_box(&self) -> Option<(&[T], &[T])> {
        match self {
            Self::Box { lower, upper } => Some((lower, upper)),
            _ => None,
        }
    }
}

fn check_box<T: Scalar>(lower: &[T], upper: &[T]) -> Result<()> {
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(Error::InvalidParameter(format!(
            "box bounds have lengths {} and {}",
            lower.len(),
            upper.len()
        )));
    }
    for (l, (&a, &b)) in lower.iter().zip(upper).enumerate() {
        if !a.is_finite() || !b.is_finite() || a > b {
            return Err(Error::InvalidParameter(format!(
                "box side {l}: [{a}, {b}] is not a finite interval"
            )));
        }
    }
    Ok(())
}

fn check_ball<T: Scalar>(center: &[T], radius: T) -> Result<()> {
    if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("ball center must be finite".into()));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    Ok(())
}
