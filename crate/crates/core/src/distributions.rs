//! Discrete priors on `Ω ⊆ ℝ^n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::csum;
use crate::{Error, Result, Scalar, SupportSet};

/// Absolute tolerance on `Σ p_i = 1`.
pub const MASS_SUM_TOL: f64 = 1e-12;

/// Atoms `x_1 … x_d ∈ ℝ^n` with masses `p_1 … p_d`.
///
/// Serialized as `{"points": [[…], …], "masses": […]}`; points are arrays
/// even when `n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution<T> {
    pub points: Vec<Vec<T>>,
    pub masses: Vec<T>,
}

/// First violated invariant found by [`DiscreteDistribution::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    LengthMismatch { points: usize, masses: usize },
    DimensionMismatch { index: usize, expected: usize, got: usize },
    NonFiniteValue { index: usize },
    NegativeMass { index: usize, mass: f64 },
    MassSum { sum: f64 },
    OutsideSupport { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "distribution has no atoms"),
            Self::LengthMismatch { points, masses } => {
                write!(f, "{points} points but {masses} masses")
            }
            Self::DimensionMismatch { index, expected, got } => {
                write!(f, "point {index} has dimension {got}, expected {expected}")
            }
            Self::NonFiniteValue { index } => write!(f, "atom {index} has a non-finite value"),
            Self::NegativeMass { index, mass } => write!(f, "mass {index} is negative ({mass})"),
            Self::MassSum { sum } => write!(f, "masses sum to {sum}"),
            Self::OutsideSupport { index } => write!(f, "point {index} lies outside the support"),
        }
    }
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Builds a distribution after structural checks (lengths, dimensions,
    /// finiteness). Simplex and support membership are left to [`Self::validate`].
    pub fn new(points: Vec<Vec<T>>, masses: Vec<T>) -> Result<Self> {
        let d = Self { points, masses };
        match d.structural_violation() {
            Some(v) => Err(Error::InvalidParameter(v.to_string())),
            None => Ok(d),
        }
    }

    /// Scalar atoms.
    pub fn from_scalars(points: &[T], masses: &[T]) -> Result<Self> {
        Self::new(points.iter().map(|&x| vec![x]).collect(), masses.to_vec())
    }

    pub fn point_mass(x: Vec<T>) -> Self {
        Self {
            points: vec![x],
            masses: vec![T::one()],
        }
    }

    /// Number of atoms `d`.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Input dimension `n`.
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn structural_violation(&self) -> Option<Violation> {
        if self.points.is_empty() && self.masses.is_empty() {
            return Some(Violation::Empty);
        }
        if self.points.len() != self.masses.len() {
            return Some(Violation::LengthMismatch {
                points: self.points.len(),
                masses: self.masses.len(),
            });
        }
        let n = self.dim();
        for (i, (x, p)) in self.points.iter().zip(&self.masses).enumerate() {
            if x.len() != n || n == 0 {
                return Some(Violation::DimensionMismatch {
                    index: i,
                    expected: n,
                    got: x.len(),
                });
            }
            if !p.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Some(Violation::NonFiniteValue { index: i });
            }
        }
        None
    }

    /// Checks every invariant, reporting the first violation.
    pub fn validate(&self, support: &SupportSet<T>) -> std::result::Result<(), Violation> {
        if let Some(v) = self.structural_violation() {
            return Err(v);
        }
        if let Some((i, p)) = self.masses.iter().enumerate().find(|(_, p)| **p < T::zero()) {
            return Err(Violation::NegativeMass {
                index: i,
                mass: p.as_f64(),
            });
        }
        let sum = csum(self.masses.iter().copied());
        if (sum - T::one()).abs() > T::tol(MASS_SUM_TOL) {
            return Err(Violation::MassSum { sum: sum.as_f64() });
        }
        if self.dim() != support.dim() {
            return Err(Violation::DimensionMismatch {
                index: 0,
                expected: support.dim(),
                got: self.dim(),
            });
        }
        if let Some(i) = self.points.iter().position(|x| !support.contains(x, T::zero())) {
            return Err(Violation::OutsideSupport { index: i });
        }
        Ok(())
    }

    /// Mean `E[X]`.
    pub fn mean(&self) -> Vec<T> {
        (0..self.dim())
            .map(|l| csum(self.points.iter().zip(&self.masses).map(|(x, &p)| p * x[l])))
            .collect()
    }

    /// Coalesces atoms and drops light ones.
    ///
    /// Atoms are grouped by single linkage (chains of pairwise distance
    /// `≤ merge_radius`), each group becomes one atom at its mass-weighted
    /// centroid carrying the summed mass, atoms lighter than
    /// `prune_threshold` are dropped and the survivors renormalized. A radius
    /// of zero disables merging; when nothing changes the input is returned
    /// unchanged. The Bayes risk of the result must be re-evaluated by the
    /// caller.
    pub fn merge_and_prune(&self, merge_radius: T, prune_threshold: T) -> Result<Self> {
        let d = self.len();
        let mut group: Vec<usize> = (0..d).collect();
        if merge_radius > T::zero() {
            let r2 = merge_radius * merge_radius;
            for i in 0..d {
                for k in (i + 1)..d {
                    if sq_dist(&self.points[i], &self.points[k]) <= r2 {
                        let (gi, gk) = (find(&mut group, i), find(&mut group, k));
                        if gi != gk {
                            group[gi.max(gk)] = gi.min(gk);
                        }
                    }
                }
            }
        }

        let mut roots: Vec<usize> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for i in 0..d {
            let g = find(&mut group, i);
            match roots.iter().position(|&r| r == g) {
                Some(k) => members[k].push(i),
                None => {
                    roots.push(g);
                    members.push(vec![i]);
                }
            }
        }

        let mut points = Vec::with_capacity(members.len());
        let mut masses = Vec::with_capacity(members.len());
        for m in &members {
            let mass = csum(m.iter().map(|&i| self.masses[i]));
            let centroid = if m.len() == 1 {
                self.points[m[0]].clone()
            } else {
                (0..self.dim())
                    .map(|l| {
                        if mass > T::zero() {
                            csum(m.iter().map(|&i| self.masses[i] * self.points[i][l])) / mass
                        } else {
                            csum(m.iter().map(|&i| self.points[i][l]))
                                / T::from_usize_lossy(m.len())
                        }
                    })
                    .collect()
            };
            if mass >= prune_threshold {
                points.push(centroid);
                masses.push(mass);
            }
        }

        if points.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if points.len() == d {
            return Ok(self.clone());
        }
        let total = csum(masses.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::EmptyDistribution);
        }
        for p in &mut masses {
            *p = *p / total;
        }
        Ok(Self { points, masses })
    }

    /// Point reflection `x ↦ 2c − x`; masses unchanged.
    pub fn reflect(&self, center: &[T]) -> Self {
        let points = self
            .points
            .iter()
            .map(|x| {
                x.iter()
                    .zip(center)
                    .map(|(&v, &c)| (c + c) - v)
                    .collect()
            })
            .collect();
        Self {
            points,
            masses: self.masses.clone(),
        }
    }

    /// Atoms reordered by lexicographic location.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.points[a]
                .iter()
                .zip(&self.points[b])
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            masses: idx.iter().map(|&i| self.masses[i]).collect(),
        }
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |s, v| s + v)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}
