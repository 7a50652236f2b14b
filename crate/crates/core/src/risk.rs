//! The five asymptotic risks and parameter sweeps over them.
//!
//! | regime | risk |
//! |---|---|
//! | oracle (center known) | `1 - Phi(1 / sigma)` |
//! | supervised, all labels | `1 - Phi(sqrt(alpha) / (sigma sqrt(alpha + sigma^2)))` |
//! | supervised, labeled part only | same with `alpha -> alpha eta` |
//! | unsupervised (sign-fixed) | `1 - Phi(sqrt(q0) / sigma)`, `q0` the global minimizer at `eta = 0` |
//! | semi-supervised | `1 - Phi(sqrt(q*) / sigma)` |

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{solve_q_star, unlabeled_minimizer, ModelParams};
use crate::scalar_channels::ScalarChannels;
use crate::special_math::normal_sf;

pub const CHANCE: f64 = 0.5;

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {value}")))
    }
}

/// `1 - Phi(sqrt(q) / sigma)` clamped to chance; the flag reports a clamp.
fn overlap_risk(q: f64, sigma2: f64) -> (f64, bool) {
    let r = normal_sf(q.max(0.0).sqrt() / sigma2.sqrt());
    if r > CHANCE {
        (CHANCE, true)
    } else {
        (r, false)
    }
}

pub fn oracle_risk(sigma2: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    Ok(normal_sf(1.0 / sigma2.sqrt()))
}

pub fn supervised_full_risk(alpha: f64, sigma2: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("sigma2", sigma2)?;
    Ok(normal_sf(alpha.sqrt() / (sigma2.sqrt() * (alpha + sigma2).sqrt())))
}

pub fn supervised_labeled_risk(params: &ModelParams) -> Result<f64> {
    if params.eta <= 0.0 {
        return Err(Error::invalid("no labeled data at eta = 0"));
    }
    supervised_full_risk(params.alpha * params.eta, params.sigma2)
}

/// Sign-fixed unsupervised risk; exactly 0.5 below the spectral threshold.
pub fn unsupervised_risk(ch: &ScalarChannels, alpha: f64, sigma2: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("sigma2", sigma2)?;
    let q0 = unlabeled_minimizer(ch, alpha, sigma2)?;
    if q0 == 0.0 {
        return Ok(CHANCE);
    }
    Ok(overlap_risk(q0, sigma2).0)
}

pub fn bayes_risk_ssl(ch: &ScalarChannels, params: &ModelParams) -> Result<f64> {
    let q = solve_q_star(ch, params)?.q_star;
    Ok(overlap_risk(q, params.sigma2).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport {
    pub params: ModelParams,
    pub oracle: f64,
    pub supervised_full: f64,
    pub supervised_labeled: f64,
    pub unsupervised: f64,
    pub semi_supervised: f64,
    pub q_star: f64,
    /// Set when numerical noise pushed the semi-supervised risk above 0.5.
    pub clamped: bool,
}

impl RiskReport {
    pub fn compute(ch: &ScalarChannels, params: &ModelParams) -> Result<Self> {
        let solve = solve_q_star(ch, params)?;
        let (semi_supervised, clamped) = overlap_risk(solve.q_star, params.sigma2);
        if clamped {
            log::warn!("semi-supervised risk clamped to 0.5 at {params:?}");
        }
        Ok(Self {
            params: *params,
            oracle: oracle_risk(params.sigma2)?,
            supervised_full: supervised_full_risk(params.alpha, params.sigma2)?,
            supervised_labeled: supervised_labeled_risk(params)?,
            unsupervised: unsupervised_risk(ch, params.alpha, params.sigma2)?,
            semi_supervised,
            q_star: solve.q_star,
            clamped,
        })
    }

    pub fn risks(&self) -> [f64; 5] {
        [
            self.oracle,
            self.supervised_full,
            self.supervised_labeled,
            self.unsupervised,
            self.semi_supervised,
        ]
    }

    /// Information ordering of the regimes, with slack `tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (name, r) in ["oracle", "supervised_full", "supervised_labeled", "unsupervised", "semi_supervised"]
            .iter()
            .zip(self.risks())
        {
            if !(0.0..=CHANCE).contains(&r) {
                out.push(format!("{name} = {r} outside [0, 0.5]"));
            }
        }
        let checks = [
            ("oracle <= semi_supervised", self.oracle, self.semi_supervised),
            ("semi_supervised <= supervised_labeled", self.semi_supervised, self.supervised_labeled),
            ("semi_supervised <= unsupervised", self.semi_supervised, self.unsupervised),
            ("supervised_full <= supervised_labeled", self.supervised_full, self.supervised_labeled),
        ];
        for (what, lhs, rhs) in checks {
            if lhs > rhs + tol {
                out.push(format!("{what} violated: {lhs} > {rhs}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eta,
    InvSigma2,
    Alpha,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::InvSigma2 => "inv_sigma2",
            SweepAxis::Alpha => "alpha",
        }
    }

    /// Replaces this axis' coordinate of `base` with `value`.
    pub fn apply(self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        match self {
            SweepAxis::Eta => ModelParams::new(base.alpha, base.sigma2, value),
            SweepAxis::InvSigma2 => {
                check_positive("inv_sigma2", value)?;
                ModelParams::new(base.alpha, 1.0 / value, base.eta)
            }
            SweepAxis::Alpha => ModelParams::new(value, base.sigma2, base.eta),
        }
    }

    fn admits(self, value: f64) -> bool {
        match self {
            SweepAxis::Eta => value > 0.0 && value <= 1.0,
            SweepAxis::InvSigma2 | SweepAxis::Alpha => value.is_finite() && value > 0.0,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweepAxis::Eta),
            "inv_sigma2" => Ok(SweepAxis::InvSigma2),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::invalid(format!(
                "unknown axis {other:?} (expected eta, inv_sigma2 or alpha)"
            ))),
        }
    }
}

/// One axis varied over `grid`, the other two coordinates taken from `fixed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fixed: ModelParams,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, grid: Vec<f64>, fixed: ModelParams) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("sweep grid is empty"));
        }
        if let Some(bad) = grid.iter().find(|&&v| !axis.admits(v)) {
            return Err(Error::invalid(format!(
                "{} grid value {bad} outside the axis domain",
                axis.name()
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sweep grid must be strictly increasing"));
        }
        Ok(Self { axis, grid, fixed })
    }

    /// `points` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(
        axis: SweepAxis,
        start: f64,
        stop: f64,
        points: usize,
        fixed: ModelParams,
    ) -> Result<Self> {
        Self::new(axis, linspace(start, stop, points)?, fixed)
    }

    pub fn points(&self) -> Result<Vec<ModelParams>> {
        self.grid
            .iter()
            .map(|&v| self.axis.apply(&self.fixed, v))
            .collect()
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::invalid("grid needs at least one point")),
        1 => Ok(vec![start]),
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            Ok((0..points)
                .map(|k| if k + 1 == points { stop } else { start + step * k as f64 })
                .collect())
        }
    }
}

/// One report per grid point, in grid order. Points are evaluated in
/// parallel on the current rayon pool; the first failure aborts with its
/// parameter context.
pub fn sweep(ch: &ScalarChannels, spec: &SweepSpec) -> Result<Vec<RiskReport>> {
    let points = spec.points()?;
    points
        .par_iter()
        .zip(spec.grid.par_iter())
        .map(|(params, value)| {
            RiskReport::compute(ch, params)
                .map_err(|e| e.at(format!("{} = {value} ({params:?})", spec.axis.name())))
        })
        .collect()
}
