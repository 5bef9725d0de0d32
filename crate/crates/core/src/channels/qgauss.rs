use super::normal::{normal_pdf, normal_sf, unit_interval_mass};
use crate::{Channel, Error, Result, Scalar};

/// `Y = Q(X + Z)`, `Z ~ N(0, 1)`, where `Q` rounds to the nearest integer and
/// clips to `{−L, …, L}`.
///
/// Output index `j` carries the label `y = j − L`:
///
/// ```text
/// P(−L | x) = Φ(−L − x + 1/2)
/// P( y | x) = Φ(y − x + 1/2) − Φ(y − x − 1/2),   |y| ≤ L − 1
/// P( L | x) = Φ(−L + x + 1/2)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedGaussianChannel {
    levels: usize,
}

impl QuantizedGaussianChannel {
    pub fn new(levels: i64) -> Result<Self> {
        if levels < 1 {
            return Err(Error::InvalidParameter(format!(
                "quantizer levels must be >= 1, got {levels}"
            )));
        }
        Ok(Self {
            levels: levels as usize,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Index of the output labelled `−y` for the output at index `j`.
    pub fn mirror_index(&self, j: usize) -> usize {
        2 * self.levels - j
    }

    #[inline]
    fn label<T: Scalar>(&self, j: usize) -> T {
        T::from_usize_lossy(j) - T::from_usize_lossy(self.levels)
    }
}

impl<T: Scalar> Channel<T> for QuantizedGaussianChannel {
    fn name(&self) -> String {
        format!("qgauss(levels={})", self.levels)
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_count(&self) -> usize {
        2 * self.levels + 1
    }

    fn output_label(&self, j: usize) -> f64 {
        j as f64 - self.levels as f64
    }

    #[inline]
    fn pmf(&self, j: usize, x: &[T]) -> T {
        let x = x[0];
        let l = T::from_usize_lossy(self.levels);
        let half = T::lit(0.5);
        if j == 0 {
            // Φ(−L − x + 1/2) = 1 − Φ(L + x − 1/2)
            normal_sf((l + x) - half)
        } else if j == 2 * self.levels {
            normal_sf((l - x) - half)
        } else {
            unit_interval_mass(self.label::<T>(j) - x)
        }
    }

    fn has_derivative(&self) -> bool {
        true
    }

    fn pmf_dx(&self, j: usize, x: &[T], _l: usize) -> Option<T> {
        let x = x[0];
        let l = T::from_usize_lossy(self.levels);
        let half = T::lit(0.5);
        let d = if j == 0 {
            -normal_pdf((l + x) - half)
        } else if j == 2 * self.levels {
            normal_pdf((l - x) - half)
        } else {
            let c = self.label::<T>(j) - x;
            normal_pdf(c - half) - normal_pdf(c + half)
        };
        Some(d)
    }
}
