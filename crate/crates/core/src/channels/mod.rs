//! Finite-output observation channels `P(y | x)` and the input support sets
//! they are evaluated on.

mod binomial;
pub mod normal;
mod product;
mod qgauss;
mod support;
mod table;

pub use binomial::BinomialChannel;
pub use normal::{normal_cdf, normal_pdf, normal_sf};
pub use product::ProductChannel;
pub use qgauss::QuantizedGaussianChannel;
pub use support::SupportSet;
pub use table::{TableChannel, TableSpec};

use serde::Serialize;

use crate::Scalar;

/// A channel with a finite output alphabet.
///
/// Outputs are addressed by index `0..output_count()`. Labels are opaque to
/// the solver and only used for reporting and symmetry lookups.
pub trait Channel<T: Scalar>: Send + Sync {
    /// Short identifier, e.g. `"binomial(m=3)"`.
    fn name(&self) -> String;

    fn input_dim(&self) -> usize;

    fn output_count(&self) -> usize;

    fn output_label(&self, j: usize) -> f64;

    /// `P(y_j | x)`.
    fn pmf(&self, j: usize, x: &[T]) -> T;

    /// Writes `P(y_j | x)` for all `j` into `out`.
    fn pmf_row(&self, x: &[T], out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.pmf(j, x);
        }
    }

    /// Whether [`Channel::pmf_dx`] is available.
    fn has_derivative(&self) -> bool {
        false
    }

    /// `∂P(y_j | x) / ∂x_l`, or `None` when the channel has no derivative.
    fn pmf_dx(&self, _j: usize, _x: &[T], _l: usize) -> Option<T> {
        None
    }

    /// Writes `∂P(y_j | x) / ∂x_l` for all `j`. Returns `false` without a derivative.
    fn pmf_dx_row(&self, x: &[T], l: usize, out: &mut [T]) -> bool {
        if !self.has_derivative() {
            return false;
        }
        for (j, o) in out.iter_mut().enumerate() {
            match self.pmf_dx(j, x, l) {
                Some(v) => *o = v,
                None => return false,
            }
        }
        true
    }

    /// Conditional mean depends on the prior only through the output marginal.
    fn t_compatible(&self) -> bool {
        false
    }
}

/// Worst violation found by [`validate_channel`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ChannelReport {
    pub ok: bool,
    /// `max |Σ_j P(y_j|x) − 1|` over the grid.
    pub max_normalization_error: f64,
    pub normalization_worst_at: Vec<f64>,
    /// Smallest pmf value seen (negative means a violation).
    pub min_pmf: f64,
    /// Largest pmf value seen (above one means a violation).
    pub max_pmf: f64,
    /// `max |Σ_j ∂P(y_j|x)/∂x_l|`, when the channel has a derivative.
    pub max_derivative_sum: Option<f64>,
    pub derivative_worst_at: Option<Vec<f64>>,
}

pub const NORMALIZATION_TOL: f64 = 1e-10;
pub const DERIVATIVE_SUM_TOL: f64 = 1e-8;

/// Checks normalization, range and (when present) the zero-sum of the input
/// derivative on a grid of `grid_size` points per coordinate of the support's
/// bounding box. Grid points outside the support are skipped.
pub fn validate_channel<T: Scalar>(
    ch: &dyn Channel<T>,
    support: &SupportSet<T>,
    grid_size: usize,
) -> ChannelReport {
    let n = ch.input_dim();
    let (lo, hi) = support.bounding_box();
    let grid_size = grid_size.max(1);
    let total = grid_size.checked_pow(n as u32).unwrap_or(usize::MAX);

    let mut report = ChannelReport {
        ok: true,
        max_normalization_error: 0.0,
        normalization_worst_at: Vec::new(),
        min_pmf: f64::INFINITY,
        max_pmf: f64::NEG_INFINITY,
        max_derivative_sum: ch.has_derivative().then_some(0.0),
        derivative_worst_at: None,
    };
    if n != support.dim() {
        report.ok = false;
        return report;
    }

    let mut row = vec![T::zero(); ch.output_count()];
    let mut x = vec![T::zero(); n];
    for flat in 0..total {
        let mut rem = flat;
        for l in 0..n {
            let k = rem % grid_size;
            rem /= grid_size;
            x[l] = if grid_size == 1 {
                (lo[l] + hi[l]) * T::lit(0.5)
            } else {
                lo[l] + (hi[l] - lo[l]) * T::from_usize_lossy(k) / T::from_usize_lossy(grid_size - 1)
            };
        }
        if !support.contains(&x, T::zero()) {
            continue;
        }
        ch.pmf_row(&x, &mut row);
        for &p in &row {
            report.min_pmf = report.min_pmf.min(p.as_f64());
            report.max_pmf = report.max_pmf.max(p.as_f64());
        }
        let err = (crate::scalar::csum(row.iter().copied()) - T::one()).abs().as_f64();
        if err > report.max_normalization_error || report.normalization_worst_at.is_empty() {
            report.max_normalization_error = err;
            report.normalization_worst_at = x.iter().map(|v| v.as_f64()).collect();
        }
        if ch.has_derivative() {
            for l in 0..n {
                if ch.pmf_dx_row(&x, l, &mut row) {
                    let s = crate::scalar::csum(row.iter().copied()).abs().as_f64();
                    let worst = report.max_derivative_sum.get_or_insert(0.0);
                    if s > *worst || report.derivative_worst_at.is_none() {
                        *worst = s;
                        report.derivative_worst_at = Some(x.iter().map(|v| v.as_f64()).collect());
                    }
                }
            }
        }
    }

    report.ok = report.max_normalization_error <= NORMALIZATION_TOL
        && report.min_pmf >= 0.0
        && report.max_pmf <= 1.0 + NORMALIZATION_TOL
        && report.max_derivative_sum.is_none_or(|s| s <= DERIVATIVE_SUM_TOL);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Binomial channel with the `y = 0` branch scaled up by 1%.
    struct Broken(BinomialChannel);

    impl Channel<f64> for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn output_count(&self) -> usize {
            Channel::<f64>::output_count(&self.0)
        }
        fn output_label(&self, j: usize) -> f64 {
            Channel::<f64>::output_label(&self.0, j)
        }
        fn pmf(&self, j: usize, x: &[f64]) -> f64 {
            let p = self.0.pmf(j, x);
            if j == 0 {
                p * 1.01
            } else {
                p
            }
        }
    }

    #[test]
    fn builtin_channels_validate() {
        let r = validate_channel(
            &BinomialChannel::new(5).unwrap(),
            &SupportSet::interval(0.0, 1.0).unwrap(),
            101,
        );
        assert!(r.ok, "{r:?}");
        let r = validate_channel(
            &QuantizedGaussianChannel::new(4).unwrap(),
            &SupportSet::interval(-5.0, 5.0).unwrap(),
            101,
        );
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn injected_fault_is_reported() {
        let r = validate_channel(
            &Broken(BinomialChannel::new(5).unwrap()),
            &SupportSet::interval(0.0, 1.0).unwrap(),
            101,
        );
        assert!(!r.ok);
        // The y = 0 branch peaks at x = 0 with mass 1.
        assert!((r.max_normalization_error - 0.01).abs() < 1e-12);
        assert_eq!(r.normalization_worst_at, vec![0.0]);
    }
}
