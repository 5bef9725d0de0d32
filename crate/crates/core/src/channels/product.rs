use std::sync::Arc;

use crate::{Channel, Error, Result, Scalar};

/// Independent per-coordinate channels: `P(y | x) = Π_l P_l(y_l | x_l)`.
///
/// Output indices are mixed-radix with coordinate 0 varying fastest; the
/// label of a joint output is its flat index.
#[derive(Clone)]
pub struct ProductChannel<T> {
    parts: Vec<Arc<dyn Channel<T>>>,
    sizes: Vec<usize>,
}

impl<T: Scalar> ProductChannel<T> {
    pub fn new(parts: Vec<Arc<dyn Channel<T>>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("product of zero channels".into()));
        }
        if parts.iter().any(|p| p.input_dim() != 1) {
            return Err(Error::InvalidParameter(
                "product channel factors must have scalar input".into(),
            ));
        }
        let sizes = parts.iter().map(|p| p.output_count()).collect();
        Ok(Self { parts, sizes })
    }

    /// `n` copies of the same scalar channel.
    pub fn power(part: Arc<dyn Channel<T>>, n: usize) -> Result<Self> {
        Self::new(vec![part; n])
    }

    fn split(&self, mut j: usize) -> impl Iterator<Item = usize> + '_ {
        self.sizes.iter().map(move |&s| {
            let k = j % s;
            j /= s;
            k
        })
    }
}

impl<T: Scalar> Channel<T> for ProductChannel<T> {
    fn name(&self) -> String {
        let names: Vec<_> = self.parts.iter().map(|p| p.name()).collect();
        format!("product[{}]", names.join(" x "))
    }

    fn input_dim(&self) -> usize {
        self.parts.len()
    }

    fn output_count(&self) -> usize {
        self.sizes.iter().product()
    }

    fn output_label(&self, j: usize) -> f64 {
        j as f64
    }

    fn pmf(&self, j: usize, x: &[T]) -> T {
        self.split(j)
            .zip(&self.parts)
            .enumerate()
            .fold(T::one(), |acc, (l, (k, p))| acc * p.pmf(k, &x[l..l + 1]))
    }

    fn has_derivative(&self) -> bool {
        self.parts.iter().all(|p| p.has_derivative())
    }

    fn pmf_dx(&self, j: usize, x: &[T], l: usize) -> Option<T> {
        let mut acc = T::one();
        for (c, (k, p)) in self.split(j).zip(&self.parts).enumerate() {
            let xc = &x[c..c + 1];
            acc = acc * if c == l { p.pmf_dx(k, xc, 0)? } else { p.pmf(k, xc) };
        }
        Some(acc)
    }
}
