use serde::{Deserialize, Serialize};

use super::ProblemSpec;
use crate::Scalar;

/// Upper bounds on the number of atoms some least favorable prior needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityBounds {
    /// `N (k + 1)(n + 1)`
    pub general: usize,
    /// `N (k + 1)`, valid when the conditional mean depends on the prior only
    /// through the output marginal.
    pub t_compatible: usize,
    /// `(n + 1)(N − 1) + k + 1`, valid for compact `Ω` with bounded continuous
    /// moment functions.
    pub refined: usize,
}

impl CardinalityBounds {
    /// `outputs = N`, `constraints = k`, `dim = n`.
    pub fn new(outputs: usize, constraints: usize, dim: usize) -> Self {
        Self {
            general: outputs * (constraints + 1) * (dim + 1),
            t_compatible: outputs * (constraints + 1),
            refined: (dim + 1) * outputs.saturating_sub(1) + constraints + 1,
        }
    }

    /// Tightest bound whose conditions are met.
    pub fn select(&self, t_compatible: bool, refined_applies: bool) -> usize {
        if t_compatible {
            self.t_compatible
        } else if refined_applies {
            self.general.min(self.refined)
        } else {
            self.general
        }
    }
}

/// Bounds for a problem.
pub fn cardinality_bounds<T: Scalar>(spec: &ProblemSpec<T>) -> CardinalityBounds {
    CardinalityBounds::new(spec.outputs(), spec.moment_constraints.len(), spec.input_dim())
}

/// Default atom count: the tightest bound that applies to `spec`.
pub fn default_atoms<T: Scalar>(spec: &ProblemSpec<T>) -> usize {
    cardinality_bounds(spec).select(spec.channel.t_compatible(), spec.refined_bound_applies)
}
