use serde::{Deserialize, Serialize};

use crate::{Channel, Error, Result, Scalar};

/// On-disk form of a tabulated channel: `pmf_rows[i][j] = P(outputs[j] | grid_x[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub outputs: Vec<f64>,
    pub grid_x: Vec<f64>,
    pub pmf_rows: Vec<Vec<f64>>,
}

/// Scalar-input channel tabulated on a grid and linearly interpolated in `x`.
///
/// This is an approximation of whatever channel produced the table. Inputs
/// outside the grid are clamped to the end rows. The derivative is the slope
/// of the active segment (the right segment at interior nodes).
#[derive(Debug, Clone)]
pub struct TableChannel<T> {
    outputs: Vec<f64>,
    grid: Vec<T>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> TableChannel<T> {
    pub fn from_spec(spec: &TableSpec) -> Result<Self> {
        let n_out = spec.outputs.len();
        if n_out == 0 {
            return Err(Error::InvalidParameter("table has no outputs".into()));
        }
        if spec.grid_x.len() < 2 {
            return Err(Error::InvalidParameter(
                "table needs at least two grid points".into(),
            ));
        }
        if spec.pmf_rows.len() != spec.grid_x.len() {
            return Err(Error::InvalidParameter(format!(
                "{} pmf rows for {} grid points",
                spec.pmf_rows.len(),
                spec.grid_x.len()
            )));
        }
        if spec.grid_x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "grid_x must be strictly increasing".into(),
            ));
        }
        for (i, row) in spec.pmf_rows.iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} entries, expected {n_out}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(Self {
            outputs: spec.outputs.clone(),
            grid: spec.grid_x.iter().map(|&x| T::lit(x)).collect(),
            rows: spec
                .pmf_rows
                .iter()
                .map(|r| r.iter().map(|&p| T::lit(p)).collect())
                .collect(),
        })
    }

    /// Segment index `k` with `grid[k] <= x <= grid[k+1]` and the clamped weight on `k + 1`.
    fn locate(&self, x: T) -> (usize, T) {
        let last = self.grid.len() - 1;
        if x <= self.grid[0] {
            return (0, T::zero());
        }
        if x >= self.grid[last] {
            return (last - 1, T::one());
        }
        let k = self.grid.partition_point(|&g| g <= x) - 1;
        let w = (x - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        (k, w)
    }
}

impl<T: Scalar> Channel<T> for TableChannel<T> {
    fn name(&self) -> String {
        format!("table(outputs={}, grid={})", self.outputs.len(), self.grid.len())
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_count(&self) -> usize {
        self.outputs.len()
    }

    fn output_label(&self, j: usize) -> f64 {
        self.outputs[j]
    }

    fn pmf(&self, j: usize, x: &[T]) -> T {
        let (k, w) = self.locate(x[0]);
        self.rows[k][j] * (T::one() - w) + self.rows[k + 1][j] * w
    }

    fn has_derivative(&self) -> bool {
        true
    }

    fn pmf_dx(&self, j: usize, x: &[T], _l: usize) -> Option<T> {
        let (k, _) = self.locate(x[0]);
        Some((self.rows[k + 1][j] - self.rows[k][j]) / (self.grid[k + 1] - self.grid[k]))
    }
}
