//! Least favorable priors for point estimation through finite-output channels.
//!
//! The maximization of the Bayes risk over priors supported on a set `Ω` is
//! carried out over discrete priors with a bounded number of atoms, which turns
//! it into a finite-dimensional problem over atom locations and masses. The
//! crate provides the pieces for that problem:
//!
//! - [`distributions`]: discrete priors and support post-processing,
//! - [`channels`]: finite-output observation channels and support sets,
//! - [`bregman`]: Bregman-divergence losses,
//! - [`risk`]: posterior tables and exact Bayes risk,
//! - [`gradients`]: analytic and finite-difference risk gradients,
//! - [`projection`]: simplex, box, ball and alternating projections,
//! - [`solver`]: cardinality bounds, projected gradient ascent, grid oracle and sweeps.
//!
//! Everything is generic over the scalar type through [`Scalar`]; the
//! `*F64` / `*F32` aliases below name the usual instantiations.

pub mod bregman;
pub mod channels;
pub mod distributions;
mod error;
pub mod gradients;
pub mod projection;
pub mod risk;
mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{NeumaierSum, Scalar};

pub use bregman::BregmanLoss;
pub use channels::{
    BinomialChannel, Channel, ProductChannel, QuantizedGaussianChannel, SupportSet, TableChannel,
};
pub use distributions::DiscreteDistribution;
pub use gradients::RiskGradient;
pub use risk::PosteriorTable;
pub use solver::{
    CardinalityBounds, GradientMode, MomentConstraint, ProblemSpec, SolveResult, SolverConfig,
};

pub type DiscreteDistributionF64 = DiscreteDistribution<f64>;
pub type DiscreteDistributionF32 = DiscreteDistribution<f32>;
pub type SupportSetF64 = SupportSet<f64>;
pub type SupportSetF32 = SupportSet<f32>;
pub type BregmanLossF64 = BregmanLoss<f64>;
pub type BregmanLossF32 = BregmanLoss<f32>;
pub type PosteriorTableF64 = PosteriorTable<f64>;
pub type RiskGradientF64 = RiskGradient<f64>;
pub type ProblemSpecF64 = ProblemSpec<f64>;
pub type ProblemSpecF32 = ProblemSpec<f32>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type SolverConfigF32 = SolverConfig<f32>;
pub type SolveResultF64 = SolveResult<f64>;
pub type SolveResultF32 = SolveResult<f32>;
