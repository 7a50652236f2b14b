//! Asymptotic Bayes risk for semi-supervised classification in a two-cluster
//! high-dimensional Gaussian mixture.
//!
//! The model: `N` points in dimension `D` (with `N / D -> alpha`) are drawn as
//! `Y_j = V_j U + sigma Z_j` with Rademacher labels `V_j`, a uniformly random
//! unit center `U`, and a fraction `eta` of the labels revealed. The crate
//! computes the limiting Bayes risk of classifying a fresh point by minimizing
//! a scalar potential, compares it against the oracle, supervised and
//! unsupervised regimes, and ships a finite-size simulator (approximate message
//! passing) that checks those predictions empirically.
//!
//! Module map:
//! - [`special_math`]: Gaussian quadrature rules, the normal CDF, stable `log cosh`.
//! - [`scalar_channels`]: MMSE and mutual information of scalar Gaussian channels.
//! - [`potential`]: the potential, its fixed-point map, and the minimizer `q*`.
//! - [`risk`]: the five asymptotic risks and parameter sweeps.
//! - [`simulator`]: data generation, AMP, empirical risks and LLR statistics.

pub mod error;
pub mod potential;
pub mod risk;
pub mod scalar_channels;
pub mod simulator;
pub mod special_math;

pub use error::{Error, Result};
pub use potential::{ModelParams, Overlaps, SolveReport};
pub use risk::{RiskReport, SweepAxis, SweepSpec};
pub use scalar_channels::{ScalarChannels, Snr};
pub use special_math::QuadratureRule;
