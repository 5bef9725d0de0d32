//! Projected gradient ascent over atom locations and masses.
//!
//! A prior with `d` atoms is the vector `[x_1 … x_d, p_1 … p_d] ∈ ℝ^{nd+d}`;
//! the feasible set is `Ω^d × simplex`. Each iteration takes
//! `proj(x + λ ∇g(x))` and keeps the step only if the risk does not drop,
//! halving `λ` otherwise.

mod bounds;
mod oracle;
pub mod report;
mod sweep;

pub use bounds::{cardinality_bounds, default_atoms, CardinalityBounds};
pub use oracle::{grid_oracle, grid_oracle_from, random_masses, GridOracleResult, GRID_ORACLE_GAP_TOL};
pub use sweep::{sweep, SweepEntry};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gradients::{analytic_from_matrices, dpmf_matrix, fd_gradient};
use crate::projection::project_simplex;
use crate::risk::{bayes_risk_from_matrix, PmfMatrix};
use crate::{BregmanLoss, Channel, DiscreteDistribution, Error, Result, Scalar, SupportSet};

/// Descriptor of a moment constraint `E[f(X)] ≤ c`. Only counted by the
/// cardinality bounds; the solver rejects problems that carry any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConstraint {
    pub function: String,
    pub bound: f64,
}

/// Channel, loss and support of a least-favorable-prior problem.
#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub channel: Arc<dyn Channel<T>>,
    pub loss: BregmanLoss<T>,
    pub support: SupportSet<T>,
    pub moment_constraints: Vec<MomentConstraint>,
    /// Whether the conditions of the refined `(n+1)(N−1)+k+1` bound hold
    /// (compact support, bounded continuous moment functions). Defaults to
    /// true without moment constraints since every [`SupportSet`] is compact.
    pub refined_bound_applies: bool,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn new(channel: Arc<dyn Channel<T>>, loss: BregmanLoss<T>, support: SupportSet<T>) -> Result<Self> {
        let n = channel.input_dim();
        if support.dim() != n || loss.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {n}, support dimension {}, loss dimension {}",
                support.dim(),
                loss.dim()
            )));
        }
        if channel.output_count() == 0 {
            return Err(Error::InvalidParameter("channel has no outputs".into()));
        }
        Ok(Self {
            channel,
            loss,
            support,
            moment_constraints: Vec::new(),
            refined_bound_applies: true,
        })
    }

    /// Adds moment-constraint metadata. The refined bound must then be
    /// re-declared by the caller.
    pub fn with_moment_constraints(mut self, constraints: Vec<MomentConstraint>, refined_applies: bool) -> Self {
        self.moment_constraints = constraints;
        self.refined_bound_applies = refined_applies;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.channel.input_dim()
    }

    /// `N`
    pub fn outputs(&self) -> usize {
        self.channel.output_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Closed form when available (scalar squared error with a channel derivative), else finite differences.
    #[default]
    Auto,
    Analytic,
    Fd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Atom count; `None` selects the tightest applicable cardinality bound.
    pub d: Option<usize>,
    /// Initial step `λ`; `None` means `0.1 · diameter(Ω)`.
    pub step: Option<T>,
    pub max_iter: usize,
    /// Stop when the projected gradient `‖(x⁺ − x)/λ‖∞` falls below this.
    pub grad_tol: T,
    /// Stop when the risk changed by at most this over `risk_window` iterations.
    pub risk_tol: T,
    pub risk_window: usize,
    pub restarts: usize,
    pub seed: u64,
    /// `None` means `1e-4 · diameter(Ω)`.
    pub merge_radius: Option<T>,
    pub prune_threshold: T,
    pub gradient_mode: GradientMode,
    /// Base finite-difference step for [`GradientMode::Fd`].
    pub fd_step: T,
    /// After the main run, retry with fewer atoms and keep the smallest
    /// support whose risk ties the best one.
    pub minimize_support: bool,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            d: None,
            step: None,
            max_iter: 200_000,
            grad_tol: T::lit(1e-8),
            risk_tol: T::lit(1e-10),
            risk_window: 50,
            restarts: 8,
            seed: 0,
            merge_radius: None,
            prune_threshold: T::lit(1e-6),
            gradient_mode: GradientMode::Auto,
            fd_step: T::lit(crate::gradients::DEFAULT_FD_STEP),
            minimize_support: true,
            parallel: true,
        }
    }
}

/// Accepted steps are doubled after this many consecutive accepts.
const ACCEPTS_BEFORE_GROWTH: usize = 20;
/// `λ` never exceeds `STEP_GROWTH_CAP · λ₀`.
const STEP_GROWTH_CAP: f64 = 8.0;
/// Restarts whose risks are this close count as tied.
pub const TIE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<T> {
    pub iteration: usize,
    pub risk: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    pub best_restart: usize,
    /// Other restarts whose final risk is within [`TIE_TOL`] of the best.
    pub ties: usize,
    /// Risk of the chosen restart before merging and pruning.
    pub raw_risk: T,
    pub raw_atoms: usize,
    /// Largest conditional risk over a 2001-point grid of a one-dimensional
    /// box, under the returned prior's Bayes estimator. An upper bound on the
    /// optimal risk up to grid resolution.
    pub grid_upper_bound: Option<T>,
    pub gradient_mode: GradientMode,
    /// Atom count of the run that produced the prior; below `bound_used`
    /// when the support search succeeded.
    pub atoms_run: usize,
    /// `(d, best risk)` of every support-search attempt, in order.
    pub support_search: Vec<(usize, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult<T> {
    pub prior: DiscreteDistribution<T>,
    pub risk: T,
    pub bound_used: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, risk)` of the chosen restart: every iteration below 200,
    /// then every 100th, plus the last.
    pub trace: Vec<TracePoint<T>>,
    pub restart_risks: Vec<T>,
    pub diagnostics: Diagnostics<T>,
}

struct RestartOutcome<T> {
    points: Vec<Vec<T>>,
    masses: Vec<T>,
    risk: T,
    iterations: usize,
    converged: bool,
    trace: Vec<TracePoint<T>>,
}

fn resolve_mode<T: Scalar>(spec: &ProblemSpec<T>, mode: GradientMode) -> Result<GradientMode> {
    let analytic_ok = spec.input_dim() == 1
        && spec.loss.has_analytic_gradient_support()
        && spec.channel.has_derivative();
    match mode {
        GradientMode::Auto if analytic_ok => Ok(GradientMode::Analytic),
        GradientMode::Auto => Ok(GradientMode::Fd),
        GradientMode::Analytic if !analytic_ok => Err(Error::Unsupported(
            "analytic gradients need n = 1, squared error and a channel derivative".into(),
        )),
        m => Ok(m),
    }
}

/// Seed of restart `r`, decorrelated from neighbouring seeds.
fn restart_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform grid of `d` cells over the bounding box, one atom per cell,
/// projected onto `Ω`. Atoms sit at the cell centres, or at a uniformly random
/// position inside the cell when `jitter` is set.
fn initial_points<T: Scalar>(support: &SupportSet<T>, d: usize, jitter: bool, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let (lo, hi) = support.bounding_box();
    let n = lo.len();
    let per_axis = (1..).find(|g: &usize| g.pow(n as u32) >= d).unwrap_or(d);
    let cells = per_axis.pow(n as u32);
    (0..d)
        .map(|k| {
            let mut flat = k * cells / d;
            let x: Vec<T> = (0..n)
                .map(|l| {
                    let c = flat % per_axis;
                    flat /= per_axis;
                    let width = (hi[l] - lo[l]) / T::from_usize_lossy(per_axis);
                    let u = if jitter { T::lit(rng.gen::<f64>()) } else { T::lit(0.5) };
                    lo[l] + width * (T::from_usize_lossy(c) + u)
                })
                .collect();
            support.project(&x)
        })
        .collect()
}

struct Objective<'a, T: Scalar> {
    spec: &'a ProblemSpec<T>,
    mode: GradientMode,
    fd_step: T,
}

impl<T: Scalar> Objective<'_, T> {
    fn risk(&self, points: &[Vec<T>], masses: &[T], pmf: &PmfMatrix<T>) -> Result<T> {
        bayes_risk_from_matrix(points, masses, pmf, &self.spec.loss)
    }

    /// `(∂g/∂x, ∂g/∂p)`
    fn gradient(&self, points: &[Vec<T>], masses: &[T], pmf: &PmfMatrix<T>) -> Result<(Vec<Vec<T>>, Vec<T>)> {
        let g = match self.mode {
            GradientMode::Analytic => {
                let dpmf = dpmf_matrix(points, self.spec.channel.as_ref())?;
                analytic_from_matrices(points, masses, pmf, &dpmf)
            }
            _ => {
                let dist = DiscreteDistribution {
                    points: points.to_vec(),
                    masses: masses.to_vec(),
                };
                fd_gradient(
                    &dist,
                    self.spec.channel.as_ref(),
                    &self.spec.loss,
                    self.fd_step,
                    Some(&self.spec.support),
                )?
            }
        };
        Ok((g.d_points, g.d_masses))
    }
}

fn run_restart<T: Scalar>(
    obj: &Objective<'_, T>,
    cfg: &SolverConfig<T>,
    d: usize,
    restart: usize,
) -> Result<RestartOutcome<T>> {
    let spec = obj.spec;
    let ch = spec.channel.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, restart));
    let mut points = initial_points(&spec.support, d, restart > 0, &mut rng);
    let mut masses = vec![T::one() / T::from_usize_lossy(d); d];
    let mut pmf = PmfMatrix::new(&points, ch);
    let mut risk = obj.risk(&points, &masses, &pmf)?;

    let step0 = cfg
        .step
        .unwrap_or_else(|| T::lit(0.1) * spec.support.diameter());
    let step0 = if step0 > T::zero() { step0 } else { T::lit(0.1) };
    let step_cap = step0 * T::lit(STEP_GROWTH_CAP);
    let step_floor = step0 * T::lit(1e-18);
    let mut step = step0;
    let mut accepts = 0usize;

    let mut trace = vec![TracePoint { iteration: 0, risk }];
    let mut history: Vec<T> = vec![risk];
    let mut converged = false;
    let mut iterations = 0usize;

    while iterations < cfg.max_iter {
        iterations += 1;
        let (gx, gp) = obj.gradient(&points, &masses, &pmf)?;

        // Backtrack until the risk does not decrease.
        let accepted = loop {
            let trial_points: Vec<Vec<T>> = points
                .iter()
                .zip(&gx)
                .map(|(x, g)| {
                    let moved: Vec<T> = x.iter().zip(g).map(|(&a, &b)| a + step * b).collect();
                    spec.support.project(&moved)
                })
                .collect();
            let moved_masses: Vec<T> = masses.iter().zip(&gp).map(|(&a, &b)| a + step * b).collect();
            let trial_masses = project_simplex(&moved_masses);
            let trial_pmf = PmfMatrix::new(&trial_points, ch);
            let trial_risk = obj.risk(&trial_points, &trial_masses, &trial_pmf)?;
            if trial_risk >= risk {
                break Some((trial_points, trial_masses, trial_pmf, trial_risk));
            }
            step = step / T::lit(2.0);
            accepts = 0;
            if step < step_floor {
                break None;
            }
        };

        let Some((np, nm, npmf, nr)) = accepted else {
            converged = true;
            break;
        };

        let mut moved = T::zero();
        for (a, b) in points.iter().flatten().zip(np.iter().flatten()) {
            moved = moved.max((*a - *b).abs());
        }
        for (a, b) in masses.iter().zip(&nm) {
            moved = moved.max((*a - *b).abs());
        }
        let projected_gradient = moved / step;

        points = np;
        masses = nm;
        pmf = npmf;
        risk = nr;
        history.push(risk);

        if iterations < 200 || iterations % 100 == 0 {
            trace.push(TracePoint { iteration: iterations, risk });
        }

        accepts += 1;
        if accepts >= ACCEPTS_BEFORE_GROWTH {
            step = (step * T::lit(2.0)).min(step_cap);
            accepts = 0;
        }

        if projected_gradient <= cfg.grad_tol {
            converged = true;
            break;
        }
        let w = cfg.risk_window;
        if w > 0 && history.len() > w {
            let old = history[history.len() - 1 - w];
            if (risk - old).abs() <= cfg.risk_tol {
                converged = true;
                break;
            }
        }
    }

    if trace.last().map(|t| t.iteration) != Some(iterations) {
        trace.push(TracePoint {
            iteration: iterations,
            risk,
        });
    }

    Ok(RestartOutcome {
        points,
        masses,
        risk,
        iterations,
        converged,
        trace,
    })
}

/// Largest conditional risk over a uniform grid of a one-dimensional box,
/// under the Bayes estimator of `prior`.
fn grid_upper_bound<T: Scalar>(spec: &ProblemSpec<T>, prior: &DiscreteDistribution<T>) -> Result<Option<T>> {
    let Some((lo, hi)) = spec.support.as_box() else {
        return Ok(None);
    };
    if lo.len() != 1 {
        return Ok(None);
    }
    let table = crate::risk::posterior(prior, spec.channel.as_ref())?;
    let anchors = crate::risk::anchors(&table, &spec.loss)?;
    let (a, b) = (lo[0], hi[0]);
    let grid = 2001;
    let mut row = vec![T::zero(); spec.outputs()];
    let mut worst = T::neg_infinity();
    for k in 0..grid {
        let x = [a + (b - a) * T::from_usize_lossy(k) / T::from_usize_lossy(grid - 1)];
        spec.channel.pmf_row(&x, &mut row);
        let phi_x = spec.loss.phi(&x)?;
        let r = crate::scalar::csum(table.active_outputs.iter().map(|&j| {
            row[j] * anchors[j].as_ref().expect("active").divergence_with_phi(&x, phi_x)
        }));
        worst = worst.max(r);
    }
    Ok(Some(worst))
}

struct Round<T> {
    outcomes: Vec<RestartOutcome<T>>,
    priors: Vec<DiscreteDistribution<T>>,
    risks: Vec<T>,
    chosen: usize,
    ties: usize,
}

/// All restarts at a fixed `d`, post-processed, with the chosen restart:
/// among those within [`TIE_TOL`] of the best risk, the smallest support,
/// then the lowest restart index.
fn run_round<T: Scalar>(obj: &Objective<'_, T>, cfg: &SolverConfig<T>, d: usize) -> Result<Round<T>> {
    let outcomes: Vec<Result<RestartOutcome<T>>> = if cfg.parallel {
        (0..cfg.restarts)
            .into_par_iter()
            .map(|r| run_restart(obj, cfg, d, r))
            .collect()
    } else {
        (0..cfg.restarts).map(|r| run_restart(obj, cfg, d, r)).collect()
    };
    let outcomes: Vec<RestartOutcome<T>> = outcomes.into_iter().collect::<Result<_>>()?;

    let spec = obj.spec;
    let radius = cfg.merge_radius.unwrap_or(T::lit(1e-4) * spec.support.diameter());
    let mut priors = Vec::with_capacity(outcomes.len());
    let mut risks = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let raw = DiscreteDistribution {
            points: o.points.clone(),
            masses: o.masses.clone(),
        };
        let prior = raw.merge_and_prune(radius, cfg.prune_threshold)?.sorted();
        let pmf = PmfMatrix::new(&prior.points, spec.channel.as_ref());
        risks.push(bayes_risk_from_matrix(&prior.points, &prior.masses, &pmf, &spec.loss)?);
        priors.push(prior);
    }

    let best = risks.iter().copied().fold(T::neg_infinity(), T::max);
    let tied: Vec<usize> = (0..risks.len())
        .filter(|&r| risks[r] >= best - T::lit(TIE_TOL))
        .collect();
    let chosen = *tied
        .iter()
        .min_by_key(|&&r| (priors[r].len(), r))
        .expect("at least one restart");
    Ok(Round {
        outcomes,
        priors,
        risks,
        chosen,
        ties: tied.len() - 1,
    })
}

/// Maximizes the Bayes risk over priors on `Ω` with at most `d` atoms.
///
/// Runs `cfg.restarts` independent ascents, post-processes each final prior
/// with [`DiscreteDistribution::merge_and_prune`], re-evaluates its risk and
/// returns the best one. Restarts within [`TIE_TOL`] of the best risk are
/// tied; among those the smallest support wins, then the lowest restart
/// index. Restart 0 starts from the unjittered grid.
///
/// With [`SolverConfig::minimize_support`], the whole run is repeated for
/// `d = 1, 2, …` below the support size found, and the first `d` whose risk
/// ties the best one replaces it.
pub fn solve<T: Scalar>(spec: &ProblemSpec<T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    if !spec.moment_constraints.is_empty() {
        return Err(Error::Unsupported(format!(
            "k >= 1: {} moment constraints; only support constraints are solved",
            spec.moment_constraints.len()
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    if let Some(s) = cfg.step {
        if !(s > T::zero()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {s}")));
        }
    }
    let bound = default_atoms(spec);
    let d = cfg.d.unwrap_or(bound);
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    let mode = resolve_mode(spec, cfg.gradient_mode)?;
    let obj = Objective {
        spec,
        mode,
        fd_step: cfg.fd_step,
    };

    let mut round = run_round(&obj, cfg, d)?;
    let mut atoms_run = d;
    let mut support_search = Vec::new();
    if cfg.minimize_support {
        let target = round.risks[round.chosen] - T::lit(TIE_TOL);
        for smaller in 1..round.priors[round.chosen].len() {
            let attempt = run_round(&obj, cfg, smaller)?;
            let risk = attempt.risks[attempt.chosen];
            support_search.push((smaller, risk));
            if risk >= target {
                round = attempt;
                atoms_run = smaller;
                break;
            }
        }
    }

    let chosen = round.chosen;
    let prior = round.priors[chosen].clone();
    let o = &round.outcomes[chosen];
    let upper = grid_upper_bound(spec, &prior)?;
    Ok(SolveResult {
        risk: round.risks[chosen],
        prior,
        bound_used: d,
        iterations: o.iterations,
        converged: o.converged,
        trace: o.trace.clone(),
        restart_risks: round.risks.clone(),
        diagnostics: Diagnostics {
            best_restart: chosen,
            ties: round.ties,
            raw_risk: o.risk,
            raw_atoms: o.masses.len(),
            grid_upper_bound: upper,
            gradient_mode: mode,
            atoms_run,
            support_search,
        },
    })
}
