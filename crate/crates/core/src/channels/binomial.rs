use crate::{Channel, Error, Result, Scalar};

/// `P(y | x) = C(m, y) x^y (1 − x)^(m − y)` on `y ∈ {0, …, m}`, `x ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialChannel {
    m: usize,
    coeffs: Vec<f64>,
}

impl BinomialChannel {
    pub fn new(m: i64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter(format!(
                "binomial trial count must be >= 1, got {m}"
            )));
        }
        let m = m as usize;
        let mut coeffs = Vec::with_capacity(m + 1);
        let mut c = 1.0_f64;
        for y in 0..=m {
            coeffs.push(c.round());
            c = c * (m - y) as f64 / (y + 1) as f64;
        }
        Ok(Self { m, coeffs })
    }

    pub fn trials(&self) -> usize {
        self.m
    }

    /// `x^a (1 − x)^b`, written so that swapping `(x, a)` with `(1 − x, b)`
    /// gives a bit-identical product.
    #[inline]
    fn mono<T: Scalar>(x: T, a: usize, b: usize) -> T {
        x.powi(a as i32) * (T::one() - x).powi(b as i32)
    }
}

impl<T: Scalar> Channel<T> for BinomialChannel {
    fn name(&self) -> String {
        format!("binomial(m={})", self.m)
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_count(&self) -> usize {
        self.m + 1
    }

    fn output_label(&self, j: usize) -> f64 {
        j as f64
    }

    #[inline]
    fn pmf(&self, j: usize, x: &[T]) -> T {
        T::lit(self.coeffs[j]) * Self::mono(x[0], j, self.m - j)
    }

    fn has_derivative(&self) -> bool {
        true
    }

    /// Expanded form `C(m,y) [y x^(y−1) (1−x)^(m−y) − (m−y) x^y (1−x)^(m−y−1)]`,
    /// finite at `x ∈ {0, 1}`.
    fn pmf_dx(&self, j: usize, x: &[T], _l: usize) -> Option<T> {
        let m = self.m;
        let x = x[0];
        let up = if j > 0 {
            T::from_usize_lossy(j) * Self::mono(x, j - 1, m - j)
        } else {
            T::zero()
        };
        let down = if j < m {
            T::from_usize_lossy(m - j) * Self::mono(x, j, m - j - 1)
        } else {
            T::zero()
        };
        Some(T::lit(self.coeffs[j]) * (up - down))
    }
}
