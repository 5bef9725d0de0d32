//! Gradients of `g(x, p) = R_φ` with respect to atom masses and locations.
//!
//! For scalar squared error the partials have closed forms:
//!
//! ```text
//! ∂g/∂p_i = E[(x_i − E[X|Y])² | X = x_i]
//! ∂g/∂x_i = 2 p_i (x_i − E[E[X|Y] | X = x_i])
//!         + p_i Σ_j P'(y_j|x_i) (E[X|y_j]² − 2 x_i E[X|y_j])
//! ```
//!
//! Everything else goes through central finite differences over the raw
//! (unnormalized) coordinates.

use serde::Serialize;

use crate::risk::{bayes_risk_from_matrix, check_dims, posterior_from_matrix, PmfMatrix};
use crate::scalar::{csum, NeumaierSum};
use crate::{BregmanLoss, Channel, DiscreteDistribution, Error, Result, Scalar, SupportSet};

/// Default base finite-difference step; the step for a coordinate `c` is `step · (1 + |c|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// `grad-check` failure threshold used by the CLI.
pub const GRAD_CHECK_FAIL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskGradient<T> {
    /// `∂g/∂p_i`
    pub d_masses: Vec<T>,
    /// `∂g/∂x_i`, one vector per atom.
    pub d_points: Vec<Vec<T>>,
}

impl<T: Scalar> RiskGradient<T> {
    pub fn is_finite(&self) -> bool {
        self.d_masses.iter().all(|v| v.is_finite())
            && self.d_points.iter().flatten().all(|v| v.is_finite())
    }
}

/// Input derivatives of the pmf, row-major `d × N`, for scalar inputs.
pub(crate) fn dpmf_matrix<T: Scalar>(points: &[Vec<T>], ch: &dyn Channel<T>) -> Result<PmfMatrix<T>> {
    let outputs = ch.output_count();
    let mut rows = vec![T::zero(); points.len() * outputs];
    for (x, row) in points.iter().zip(rows.chunks_mut(outputs)) {
        if !ch.pmf_dx_row(x, 0, row) {
            return Err(Error::NeedsDerivative);
        }
    }
    Ok(PmfMatrix { rows, outputs })
}

/// Closed-form gradient from precomputed pmf / derivative matrices.
pub(crate) fn analytic_from_matrices<T: Scalar>(
    points: &[Vec<T>],
    masses: &[T],
    pmf: &PmfMatrix<T>,
    dpmf: &PmfMatrix<T>,
) -> RiskGradient<T> {
    let table = posterior_from_matrix(points, masses, pmf);
    let means: Vec<(usize, T)> = table
        .active_outputs
        .iter()
        .map(|&j| (j, table.cond_mean[j].as_ref().expect("active")[0]))
        .collect();
    let two = T::lit(2.0);
    let mut d_masses = Vec::with_capacity(points.len());
    let mut d_points = Vec::with_capacity(points.len());
    for (i, (x, &p)) in points.iter().zip(masses).enumerate() {
        let x = x[0];
        let row = pmf.row(i);
        let drow = dpmf.row(i);
        let mut cond_risk = NeumaierSum::new();
        let mut smoothed = NeumaierSum::new();
        let mut drift = NeumaierSum::new();
        for &(j, c) in &means {
            let e = x - c;
            cond_risk.add(row[j] * e * e);
            smoothed.add(row[j] * c);
            drift.add(drow[j] * (c * c - two * x * c));
        }
        d_masses.push(cond_risk.value());
        d_points.push(vec![two * p * (x - smoothed.value()) + p * drift.value()]);
    }
    RiskGradient { d_masses, d_points }
}

/// Closed-form gradient for scalar squared error.
pub fn analytic_gradient_sq<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
) -> Result<RiskGradient<T>> {
    check_dims(dist, ch)?;
    if dist.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            expected: 1,
            got: dist.dim(),
        });
    }
    if !ch.has_derivative() {
        return Err(Error::NeedsDerivative);
    }
    let pmf = PmfMatrix::new(&dist.points, ch);
    let dpmf = dpmf_matrix(&dist.points, ch)?;
    Ok(analytic_from_matrices(&dist.points, &dist.masses, &pmf, &dpmf))
}

/// Central finite differences of `g` over the raw coordinates.
///
/// Each coordinate `c` is perturbed by `h = step · (1 + |c|)`. Masses are
/// perturbed without renormalization. When `support` is given, a location
/// perturbation that would leave it falls back to a one-sided difference.
pub fn fd_gradient<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
    loss: &BregmanLoss<T>,
    step: T,
    support: Option<&SupportSet<T>>,
) -> Result<RiskGradient<T>> {
    check_dims(dist, ch)?;
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let pmf = PmfMatrix::new(&dist.points, ch);
    let points = &dist.points;
    let two = T::lit(2.0);

    let mut masses = dist.masses.clone();
    let mut d_masses = Vec::with_capacity(masses.len());
    for i in 0..masses.len() {
        let p0 = masses[i];
        let h = step * (T::one() + p0.abs());
        masses[i] = p0 + h;
        let up = bayes_risk_from_matrix(points, &masses, &pmf, loss)?;
        masses[i] = p0 - h;
        let down = bayes_risk_from_matrix(points, &masses, &pmf, loss)?;
        masses[i] = p0;
        d_masses.push((up - down) / (two * h));
    }

    let n = dist.dim();
    let outputs = pmf.outputs;
    let mut work_points = points.clone();
    let mut work_pmf = pmf.clone();
    let mut d_points = Vec::with_capacity(points.len());
    let eval = |i: usize, x: Vec<T>, wp: &mut Vec<Vec<T>>, wm: &mut PmfMatrix<T>| -> Result<T> {
        ch.pmf_row(&x, &mut wm.rows[i * outputs..(i + 1) * outputs]);
        wp[i] = x;
        bayes_risk_from_matrix(wp, &masses, wm, loss)
    };
    for i in 0..points.len() {
        let mut gi = Vec::with_capacity(n);
        for l in 0..n {
            let c = points[i][l];
            let h = step * (T::one() + c.abs());
            let mut plus = points[i].clone();
            plus[l] = c + h;
            let mut minus = points[i].clone();
            minus[l] = c - h;
            let (fwd_ok, bwd_ok) = match support {
                Some(s) => (s.contains(&plus, T::zero()), s.contains(&minus, T::zero())),
                None => (true, true),
            };
            let g = match (fwd_ok, bwd_ok) {
                (true, true) => {
                    let up = eval(i, plus, &mut work_points, &mut work_pmf)?;
                    let down = eval(i, minus, &mut work_points, &mut work_pmf)?;
                    (up - down) / (two * h)
                }
                (true, false) => {
                    let up = eval(i, plus, &mut work_points, &mut work_pmf)?;
                    let mid = eval(i, points[i].clone(), &mut work_points, &mut work_pmf)?;
                    (up - mid) / h
                }
                (false, true) => {
                    let mid = eval(i, points[i].clone(), &mut work_points, &mut work_pmf)?;
                    let down = eval(i, minus, &mut work_points, &mut work_pmf)?;
                    (mid - down) / h
                }
                (false, false) => T::zero(),
            };
            gi.push(g);
        }
        // restore row i
        eval(i, points[i].clone(), &mut work_points, &mut work_pmf)?;
        d_points.push(gi);
    }
    Ok(RiskGradient { d_masses, d_points })
}

/// Which gradient entry a [`GradCheckReport`] points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradEntry {
    Mass { index: usize },
    Point { index: usize, coord: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_entry: GradEntry,
    pub analytic: f64,
    pub numeric: f64,
}

/// Entrywise comparison of the closed-form gradient with [`fd_gradient`].
///
/// Relative error is `|a − f| / max(1e-8, |a|)`.
pub fn grad_check<T: Scalar>(
    dist: &DiscreteDistribution<T>,
    ch: &dyn Channel<T>,
    loss: &BregmanLoss<T>,
    step: T,
    support: Option<&SupportSet<T>>,
) -> Result<GradCheckReport> {
    if !loss.has_analytic_gradient_support() {
        return Err(Error::Unsupported(format!(
            "no closed-form gradient for loss {}",
            loss.name()
        )));
    }
    let a = analytic_gradient_sq(dist, ch)?;
    let f = fd_gradient(dist, ch, loss, step, support)?;
    let entries = a
        .d_masses
        .iter()
        .zip(&f.d_masses)
        .enumerate()
        .map(|(i, (&x, &y))| (GradEntry::Mass { index: i }, x, y))
        .chain(a.d_points.iter().zip(&f.d_points).enumerate().flat_map(|(i, (xa, xf))| {
            xa.iter()
                .zip(xf)
                .enumerate()
                .map(move |(l, (&x, &y))| (GradEntry::Point { index: i, coord: l }, x, y))
        }));
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_entry: GradEntry::Mass { index: 0 },
        analytic: a.d_masses[0].as_f64(),
        numeric: f.d_masses[0].as_f64(),
    };
    for (entry, an, num) in entries {
        let (an, num) = (an.as_f64(), num.as_f64());
        let rel = (an - num).abs() / an.abs().max(1e-8);
        if rel > report.max_rel_err || rel.is_nan() {
            report = GradCheckReport {
                max_rel_err: rel,
                worst_entry: entry,
                analytic: an,
                numeric: num,
            };
        }
    }
    Ok(report)
}

/// `Σ_i p_i ∂g/∂p_i`, which equals `g` (the risk is homogeneous of degree one in the raw masses).
pub fn mass_weighted_sum<T: Scalar>(masses: &[T], grad: &RiskGradient<T>) -> T {
    csum(masses.iter().zip(&grad.d_masses).map(|(&p, &g)| p * g))
}
