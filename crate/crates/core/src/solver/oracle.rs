//! Mass-only ascent on a fixed grid of locations.
//!
//! With locations fixed the risk is concave in the masses (an infimum of
//! linear functionals), so the grid-restricted maximum is global. For any
//! masses `p` with conditional risks `r_i(p)`, the grid optimum lies in
//! `[g(p), max_i r_i(p)]`, which gives a stopping certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ProblemSpec;
use crate::projection::project_simplex;
use crate::risk::{conditional_risks_from_matrix, posterior_from_matrix, PmfMatrix};
use crate::scalar::csum;
use crate::{Error, Result, Scalar};

/// Stop once `max_i r_i − g` is below this.
pub const GRID_ORACLE_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOracleResult<T> {
    pub risk: T,
    pub points: Vec<T>,
    pub masses: Vec<T>,
    /// `max_i r_i − risk` at the returned masses.
    pub gap: T,
    pub iterations: usize,
}

fn value_and_gradient<T: Scalar>(
    points: &[Vec<T>],
    masses: &[T],
    pmf: &PmfMatrix<T>,
    spec: &ProblemSpec<T>,
) -> Result<(T, Vec<T>)> {
    let table = posterior_from_matrix(points, masses, pmf);
    let r = conditional_risks_from_matrix(points, pmf, &table, &spec.loss)?;
    let g = csum(masses.iter().zip(&r).map(|(&p, &ri)| p * ri));
    Ok((g, r))
}

fn grid<T: Scalar>(spec: &ProblemSpec<T>, grid_points: usize) -> Result<Vec<Vec<T>>> {
    if spec.input_dim() != 1 {
        return Err(Error::UnsupportedDimension {
            expected: 1,
            got: spec.input_dim(),
        });
    }
    let Some((lo, hi)) = spec.support.as_box() else {
        return Err(Error::Unsupported("grid oracle needs a box support".into()));
    };
    if grid_points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let (a, b) = (lo[0], hi[0]);
    Ok((0..grid_points)
        .map(|k| {
            if grid_points == 1 {
                vec![(a + b) * T::lit(0.5)]
            } else {
                let t = T::from_usize_lossy(k) / T::from_usize_lossy(grid_points - 1);
                vec![a + (b - a) * t]
            }
        })
        .collect())
}

/// Grid oracle from uniform initial masses.
pub fn grid_oracle<T: Scalar>(spec: &ProblemSpec<T>, grid_points: usize, iters: usize) -> Result<GridOracleResult<T>> {
    let init = vec![T::one() / T::from_usize_lossy(grid_points.max(1)); grid_points];
    grid_oracle_from(spec, grid_points, iters, &init)
}

/// Grid oracle from given initial masses (projected onto the simplex first).
///
/// Accelerated projected gradient ascent with backtracking and momentum
/// restarts; stops at `iters` iterations or when the certificate gap drops
/// below [`GRID_ORACLE_GAP_TOL`].
pub fn grid_oracle_from<T: Scalar>(
    spec: &ProblemSpec<T>,
    grid_points: usize,
    iters: usize,
    initial_masses: &[T],
) -> Result<GridOracleResult<T>> {
    let points = grid(spec, grid_points)?;
    if initial_masses.len() != grid_points {
        return Err(Error::DimensionMismatch(format!(
            "{} initial masses for {grid_points} grid points",
            initial_masses.len()
        )));
    }
    let pmf = PmfMatrix::new(&points, spec.channel.as_ref());
    let gap_tol = T::tol(GRID_ORACLE_GAP_TOL);
    let two = T::lit(2.0);

    let mut p = project_simplex(initial_masses);
    let (mut g, mut r) = value_and_gradient(&points, &p, &pmf, spec)?;
    let mut y = p.clone();
    let (mut gy, mut ry) = (g, r.clone());
    let mut t = T::one();
    let mut step = T::one();
    let mut iterations = 0;

    let gap_of = |g: T, r: &[T]| r.iter().copied().fold(T::neg_infinity(), T::max) - g;
    let mut gap = gap_of(g, &r);

    while iterations < iters && gap > gap_tol {
        iterations += 1;
        // Backtracking on the quadratic lower model around y.
        let (np, ng, nr) = loop {
            let moved: Vec<T> = y.iter().zip(&ry).map(|(&a, &b)| a + step * b).collect();
            let cand = project_simplex(&moved);
            let (cg, cr) = value_and_gradient(&points, &cand, &pmf, spec)?;
            let diff: Vec<T> = cand.iter().zip(&y).map(|(&a, &b)| a - b).collect();
            let lin = csum(diff.iter().zip(&ry).map(|(&dv, &gv)| dv * gv));
            let sq = csum(diff.iter().map(|&dv| dv * dv));
            if cg >= gy + lin - sq / (two * step) || step < T::lit(1e-30) {
                break (cand, cg, cr);
            }
            step = step / two;
        };

        if ng < g {
            // Momentum overshot; restart from the last iterate.
            t = T::one();
            y = p.clone();
            gy = g;
            ry = r.clone();
            continue;
        }

        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / two;
        let beta = (t - T::one()) / t_next;
        y = np
            .iter()
            .zip(&p)
            .map(|(&a, &b)| (a + beta * (a - b)).max(T::zero()))
            .collect();
        t = t_next;
        p = np;
        g = ng;
        r = nr;
        gap = gap_of(g, &r);
        let (vy, vr) = value_and_gradient(&points, &y, &pmf, spec)?;
        gy = vy;
        ry = vr;
        // Let the step recover slowly after backtracking.
        step = step * T::lit(1.05);
    }

    Ok(GridOracleResult {
        risk: g,
        points: points.into_iter().map(|x| x[0]).collect(),
        masses: p,
        gap,
        iterations,
    })
}

/// Random simplex point from uniform weights in `(0, 1]`.
pub fn random_masses<T: Scalar>(len: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..len).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| T::lit(v / s)).collect()
}
