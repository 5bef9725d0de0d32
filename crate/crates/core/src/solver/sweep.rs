use serde::{Deserialize, Serialize};

use super::{solve, ProblemSpec, SolveResult, SolverConfig};
use crate::{Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry<T> {
    pub parameter: i64,
    pub result: SolveResult<T>,
}

/// Solves the problem built by `template` for every parameter value with a
/// shared configuration. Entries come back in parameter order.
pub fn sweep<T, F>(template: F, parameters: &[i64], cfg: &SolverConfig<T>) -> Result<Vec<SweepEntry<T>>>
where
    T: Scalar,
    F: Fn(i64) -> Result<ProblemSpec<T>>,
{
    parameters
        .iter()
        .map(|&parameter| {
            let spec = template(parameter)?;
            Ok(SweepEntry {
                parameter,
                result: solve(&spec, cfg)?,
            })
        })
        .collect()
}
