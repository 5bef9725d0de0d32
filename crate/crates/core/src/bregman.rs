//! Bregman-divergence losses `ℓ_φ(u, v) = φ(u) − φ(v) − ⟨u − v, ∇φ(v)⟩`.
//!
//! Every instance is evaluated through that one formula; closed forms such as
//! `‖u − v‖²` only appear in tests.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result, Scalar};

/// Slack allowed below zero for `ℓ_φ(u, v)` in floating point.
pub const NONNEGATIVITY_TOL: f64 = 1e-12;
/// Slack for convexity in `u`, linearity in `φ` and the Pythagorean identity.
pub const IDENTITY_TOL: f64 = 1e-10;
/// `ℓ_φ(u, v) ≤ EQUALITY_LOSS` must imply `‖u − v‖ ≤ EQUALITY_DISTANCE`.
pub const EQUALITY_LOSS: f64 = 1e-10;
pub const EQUALITY_DISTANCE: f64 = 1e-4;

pub type GeneratorFn<T> =Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type GradientFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
pub type DomainFn<T> = Arc<dyn Fn(&[T]) -> bool + Send + Sync>;

/// Loss induced by a continuously differentiable, strictly convex generator.
///
/// Strict convexity of user-supplied generators is not checked.
#[derive(Clone)]
pub struct BregmanLoss<T> {
    name: String,
    dim: usize,
    phi: GeneratorFn<T>,
    grad_phi: GradientFn<T>,
    domain: DomainFn<T>,
    domain_note: String,
    analytic_gradient: bool,
}

impl<T> fmt::Debug for BregmanLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BregmanLoss")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain_note)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> BregmanLoss<T> {
    pub fn from_generator(
        name: impl Into<String>,
        dim: usize,
        phi: GeneratorFn<T>,
        grad_phi: GradientFn<T>,
        domain: DomainFn<T>,
        domain_note: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            phi,
            grad_phi,
            domain,
            domain_note: domain_note.into(),
            analytic_gradient: false,
        }
    }

    /// `φ(u) = ‖u‖²`, so `ℓ_φ(u, v) = ‖u − v‖²`.
    pub fn squared_error(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Self {
            name: "sq".into(),
            dim: n,
            phi: Arc::new(|u: &[T]| u.iter().fold(T::zero(), |s, &x| s + x * x)),
            grad_phi: Arc::new(|u: &[T], g: &mut [T]| {
                for (gi, &x) in g.iter_mut().zip(u) {
                    *gi = x + x;
                }
            }),
            domain: Arc::new(|u: &[T]| u.iter().all(|x| x.is_finite())),
            domain_note: format!("R^{n}"),
            analytic_gradient: n == 1,
        }
    }

    /// Generalized I-divergence: `φ(u) = u₁ log u₁ + u₂ log u₂` on the open
    /// positive quadrant, giving `Σ u_k log(u_k / v_k) − (u_k − v_k)`.
    pub fn generalized_i_divergence() -> Self {
        Self {
            name: "gid".into(),
            dim: 2,
            phi: Arc::new(|u: &[T]| u.iter().fold(T::zero(), |s, &x| s + x * x.ln())),
            grad_phi: Arc::new(|u: &[T], g: &mut [T]| {
                for (gi, &x) in g.iter_mut().zip(u) {
                    *gi = x.ln() + T::one();
                }
            }),
            domain: Arc::new(|u: &[T]| u.iter().all(|&x| x > T::zero() && x.is_finite())),
            domain_note: "open positive quadrant of R^2".into(),
            analytic_gradient: false,
        }
    }

    /// Loss generated by `a φ₁ + b φ₂` (`a, b ≥ 0`) on the intersection of domains.
    pub fn combine(a: T, first: &Self, b: T, second: &Self) -> Result<Self> {
        if first.dim != second.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot combine losses of dimension {} and {}",
                first.dim, second.dim
            )));
        }
        if a < T::zero() || b < T::zero() {
            return Err(Error::InvalidParameter(
                "generator weights must be nonnegative".into(),
            ));
        }
        let (p1, p2) = (first.phi.clone(), second.phi.clone());
        let (g1, g2) = (first.grad_phi.clone(), second.grad_phi.clone());
        let (d1, d2) = (first.domain.clone(), second.domain.clone());
        let dim = first.dim;
        Ok(Self {
            name: format!("{a}*{}+{b}*{}", first.name, second.name),
            dim,
            phi: Arc::new(move |u: &[T]| a * p1(u) + b * p2(u)),
            grad_phi: Arc::new(move |u: &[T], g: &mut [T]| {
                let mut tmp = vec![T::zero(); dim];
                g1(u, g);
                g2(u, &mut tmp);
                for (gi, ti) in g.iter_mut().zip(tmp) {
                    *gi = a * *gi + b * ti;
                }
            }),
            domain: Arc::new(move |u: &[T]| d1(u) && d2(u)),
            domain_note: format!("{} ∩ {}", first.domain_note, second.domain_note),
            analytic_gradient: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_note(&self) -> &str {
        &self.domain_note
    }

    /// True only for scalar squared error, the case with closed-form risk gradients.
    pub fn has_analytic_gradient_support(&self) -> bool {
        self.analytic_gradient
    }

    pub fn in_domain(&self, u: &[T]) -> bool {
        u.len() == self.dim && (self.domain)(u)
    }

    fn check(&self, u: &[T], what: &str) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{what} has dimension {}, loss {} expects {}",
                u.len(),
                self.name,
                self.dim
            )));
        }
        if !(self.domain)(u) {
            return Err(Error::Domain(format!(
                "{what} {u:?} outside {} ({})",
                self.domain_note, self.name
            )));
        }
        Ok(())
    }

    /// Generator value `φ(u)`.
    pub fn phi(&self, u: &[T]) -> Result<T> {
        self.check(u, "argument")?;
        Ok((self.phi)(u))
    }

    /// Precomputes `φ(v)` and `∇φ(v)` for repeated evaluation of `ℓ_φ(·, v)`.
    pub fn anchor(&self, v: &[T]) -> Result<Anchor<T>> {
        self.check(v, "anchor")?;
        let mut grad = vec![T::zero(); self.dim];
        (self.grad_phi)(v, &mut grad);
        Ok(Anchor {
            point: v.to_vec(),
            phi: (self.phi)(v),
            grad,
        })
    }

    /// `ℓ_φ(u, v)`.
    pub fn divergence(&self, u: &[T], v: &[T]) -> Result<T> {
        self.check(u, "first argument")?;
        let a = self.anchor(v)?;
        Ok(a.divergence_with_phi(u, (self.phi)(u)))
    }
}

/// `φ(v)` and `∇φ(v)` cached for a fixed second argument `v`.
#[derive(Debug, Clone)]
pub struct Anchor<T> {
    point: Vec<T>,
    phi: T,
    grad: Vec<T>,
}

impl<T: Scalar> Anchor<T> {
    pub fn point(&self) -> &[T] {
        &self.point
    }

    /// `ℓ_φ(u, v)` given `φ(u)` (the caller is responsible for `u` being in the domain).
    #[inline]
    pub fn divergence_with_phi(&self, u: &[T], phi_u: T) -> T {
        let inner = u
            .iter()
            .zip(&self.point)
            .zip(&self.grad)
            .fold(T::zero(), |s, ((&a, &b), &g)| s + (a - b) * g);
        phi_u - self.phi - inner
    }
}
