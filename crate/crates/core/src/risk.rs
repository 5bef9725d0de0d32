//! Exact Bayes risk of a discrete prior observed through a finite-output channel.
//!
//! With atoms `x_i`, masses `p_i` and `P(y_j | x_i)`:
//!
//! ```text
//! P_Y(y_j)     = Σ_i p_i P(y_j|x_i)
//! E[X | y_j]   = Σ_i p_i x_i P(y_j|x_i) / P_Y(y_j)
//! R_φ          = Σ_i Σ_j p_i P(y_j|x_i) ℓ_φ(x_i, E[X | y_j])
//! ```
//!
//! Outputs with zero marginal are inactive: they carry no conditional mean and
//! are left out of every sum. All functions here accept unnormalized
//! (even signed) mass vectors; the sums are linear in the masses, which is
//! what finite differences over raw masses rely on.

use serde::Serialize;

use crate::bregman::Anchor;
use crate::scalar::{csum, NeumaierSum};
use crate::{BregmanLoss, Channel, DiscreteDistribution, Error, Result, Scalar};

/// Output marginal and conditional means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorTable<T> {
    pub marginal: Vec<T>,
    /// `None` for inactive outputs.
    pub cond_mean: Vec<Option<Vec<T>>>,
    pub active_outputs: Vec<usize>,
}

/// `P(y_j | x_i)` for every atom, row-major `d × N`.
#[derive(Debug, Clone)]
pub struct PmfMatrix<T> {
    pub rows: Vec<T>,
    pub outputs: usize,
}

impl<T: Scalar> PmfMatrix<T> {
    pub fn new(points: &[Vec<T>], ch: &dyn Channel<T>) -> Self {
        let outputs = ch.output_count();
        let mut rows = vec![T::zero(); points.len() * outputs];
        for (x, row) in points.iter().zip(rows.chunks_mut(outputs)) {
            ch.pmf_row(x, row);
        }
        Self { rows, outputs }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.outputs..(i + 1) * self.outputs]
    }

    pub fn atoms(&self) -> usize {
        self.rows.len() / self.outputs.max(1)
    }
}

pub(crate) fn check_dims<T: Scalar>(dist: &DiscreteDistribution<T>, ch: &dyn Channel<T>) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if dist.dim() != ch.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "prior has dimension {}, channel {} expects {}",
            dist.dim(),
            ch.name(),
            ch.input_dim()
        )));
    }
    Ok(())
}

fn check_loss_dim<T: Scalar>(dist: &DiscreteDistribution<T>, loss: &BregmanLoss<T>) -> Result<()> {
    if dist.dim() != loss.dim() {
        return Err(Error::DimensionMismatch(format!(
            "prior has dimension {}, loss {} expects {}",
            dist.dim(),
            loss.name(),
            loss.dim()
        )));
    }
    Ok(())
}

/// Posterior table from a precomputed pmf matrix.
pub fn posterior_from_matrix<T: Scalar>(
    points: &[Vec<T>],
    masses: &[T],
    pmf: &PmfMatrix<T>,
) -> PosteriorTable<T> {
    let n = points.first().map_or(0, Vec::len);
    let outputs = pmf.outputs;
    let mut marginal = Vec::with_capacity(outputs);
    let mut cond_mean = Vec::with_capacity(outputs);
    let mut active = Vec::new();
    let mut numer: Vec<NeumaierSum<T>> = vec![NeumaierSum::new(); n];
    for j in 0..outputs {
        let mut m = NeumaierSum::new();
        numer.iter_mut().for_each(|s| *s = NeumaierSum::new());
        for (i, (x, &p)) in points.iter().zip(masses).enumerate() {
            let w = p * pmf.rows[i * outputs + j];
            m.add(w);
            for (s, &xl) in numer.iter_mut().zip(x) {
                s.add(w * xl);
            }
        }
        let mj = m.value();
        marginal.push(mj);
        if mj > T::zero() {
            active.push(j);
            cond_mean.push(Some(numer.iter().map(|s| s.value() / mj).collect()));
        } else {
            cond_mean.push(None);
        }
    }
    PosteriorTable {
        marginal,
        cond_mean,
        active_outputs: active,
    }
}

/// Loss anchors at the active conditional means.
pub(crate) fn anchors<T: Scalar>(
    table: &PosteriorTable<T>,
    loss: &BregmanLoss<T>,
) -> Result<Vec<Option<Anchor<T>>>> {
    table
        .cond_mean
        .iter()
        .map(|c| c.as_ref().map(|v| loss.anchor(v)).transpose())
        .collect()
}

/// Conditional risks `r_i = Σ_{j active} P(y_j|x_i) ℓ_φ(x_i, E[X|y_j])`.
///
/// `r_i` is also `∂R/∂p_i` over raw masses (the Bayes estimator is optimal,
/// so its variation does not contribute).
pub fn conditional_risks_from_matrix<T: Scalar>(
    points: &[Vec<T>],
    pmf: &PmfMatrix<T>,
    table: &PosteriorTable<T>,
    loss: &BregmanLoss<T>,
) -> Result<Vec<T>> {
    let anchors = anchors(table, loss)?;
    points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let phi_x = loss.phi(x)?;
            let row = pmf.row(i);
            Ok(csum(table.active_outputs.iter().map(|&j| {
                let a = anchors[j].as_ref().expect("active output has an anchor");
                row[j] * a.divergence_with_phi(x, phi_x)
            })))
        })
        .collect()
}

/// `R_φ` from a precomputed pmf matrix; masses need not be normalized.
pub fn bayes_risk_from_matrix<T: Scalar>(
    points: &[Vec<T>],
    masses: &[T],
    pmf: &PmfMatrix<T>,
    loss: &BregmanLoss<T>,
) -> Result<T> {
    let table = posterior_from_matrix(points, masses, pmf);
    let r = conditional_risks_from_matrix(points, pmf, &table, loss)?;
    Ok(csum(masses.iter().zip(&r).map(|(&p, &ri)| p * ri)))
}

/// `P_Y` and `E[X | Y]` for a prior.
pub fn posterior<T: Scalar>(dist: &DiscreteDistribution<T>, ch: &dyn Channel<T>) -> Result<PosteriorTable<T>> {
    check_dims(dist, ch)?;
    let pmf = PmfMatrix::new(&dist.points, ch);
    Ok(posterior_from_matrix(&dist.points, &dist.masses, &pmf))
}

/// `R_φ(P_X, P_{Y|X}) = E[ℓ_φ(X, E[X|Y])]`.
pub fn bayes_risk<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
    loss: &BregmanLoss<T>,
) -> Result<T> {
    check_dims(dist, ch)?;
    check_loss_dim(dist, loss)?;
    let pmf = PmfMatrix::new(&dist.points, ch);
    bayes_risk_from_matrix(&dist.points, &dist.masses, &pmf, loss)
}

/// Conditional risk at every atom of `dist` under its own Bayes estimator.
pub fn conditional_risks<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
    loss: &BregmanLoss<T>,
) -> Result<Vec<T>> {
    check_dims(dist, ch)?;
    check_loss_dim(dist, loss)?;
    let pmf = PmfMatrix::new(&dist.points, ch);
    let table = posterior_from_matrix(&dist.points, &dist.masses, &pmf);
    conditional_risks_from_matrix(&dist.points, &pmf, &table, loss)
}

/// Squared-error risk through `E[X²] − E[E[X|Y]²]` (scalar input only).
pub fn mmse_risk<T: Scalar>(dist: &DiscreteDistribution<T>, ch: &dyn Channel<T>) -> Result<T> {
    check_dims(dist, ch)?;
    if dist.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            expected: 1,
            got: dist.dim(),
        });
    }
    let table = posterior(dist, ch)?;
    let second = csum(dist.points.iter().zip(&dist.masses).map(|(x, &p)| p * x[0] * x[0]));
    let explained = csum(table.active_outputs.iter().map(|&j| {
        let c = table.cond_mean[j].as_ref().expect("active")[0];
        table.marginal[j] * c * c
    }));
    Ok(second - explained)
}

/// `E[ℓ_φ(X, f(Y))]` for an arbitrary estimator given as one value per output.
pub fn risk_of_estimator<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
    loss: &BregmanLoss<T>,
    estimator: &[Vec<T>],
) -> Result<T> {
    check_dims(dist, ch)?;
    check_loss_dim(dist, loss)?;
    if estimator.len() != ch.output_count() {
        return Err(Error::DimensionMismatch(format!(
            "estimator has {} values for {} outputs",
            estimator.len(),
            ch.output_count()
        )));
    }
    let anchors: Vec<Anchor<T>> = estimator.iter().map(|v| loss.anchor(v)).collect::<Result<_>>()?;
    let pmf = PmfMatrix::new(&dist.points, ch);
    let mut total = NeumaierSum::new();
    for (i, (x, &p)) in dist.points.iter().zip(&dist.masses).enumerate() {
        let phi_x = loss.phi(x)?;
        for (j, a) in anchors.iter().enumerate() {
            total.add(p * pmf.rows[i * pmf.outputs + j] * a.divergence_with_phi(x, phi_x));
        }
    }
    Ok(total.value())
}
