//! Scalar Gaussian channels `Y = sqrt(gamma) X + Z`.
//!
//! For a Rademacher input `X = +-1` the posterior mean is `tanh(sqrt(gamma) Y)`,
//! and by the Nishimori identity
//!
//! ```text
//! mmse_v(gamma) = 1 - E tanh(sqrt(gamma) Z + gamma)
//! i_v(gamma)    = gamma - E log cosh(sqrt(gamma) Z + gamma)
//! i_v'(gamma)   = mmse_v(gamma) / 2
//! ```
//!
//! For a standard Gaussian input, `mmse_u = 1 / (1 + gamma)` and
//! `i_u = log(1 + gamma) / 2`, with the same `i' = mmse / 2` relation.
//! All informations are in nats.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special_math::{log_cosh, normal_pdf, normal_sf, QuadratureRule};

/// Above this SNR `E log cosh` is evaluated as `gamma - log 2` plus
/// exponentially small corrections, avoiding the `gamma - (gamma - ...)`
/// cancellation.
pub const LARGE_SNR: f64 = 500.0;

/// The `i_v'(gamma) = c * mmse_v(gamma)` constant. Checked against the
/// stationarity of the potential at the fixed point in the validation suite.
pub const I_MMSE_FACTOR: f64 = 0.5;

/// Effective signal-to-noise ratio of a scalar channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Snr(f64);

impl Snr {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_nan() || gamma < 0.0 || gamma == f64::INFINITY {
            return Err(Error::invalid(format!(
                "snr must be finite and nonnegative, got {gamma}"
            )));
        }
        Ok(Self(gamma))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Snr {
    type Error = Error;

    fn try_from(gamma: f64) -> Result<Self> {
        Snr::new(gamma)
    }
}

/// Channel quantities evaluated with one shared quadrature rule.
#[derive(Debug, Clone, Default)]
pub struct ScalarChannels {
    rule: QuadratureRule,
}

impl ScalarChannels {
    pub fn new(rule: QuadratureRule) -> Self {
        Self { rule }
    }

    pub fn with_order(order: usize) -> Result<Self> {
        Ok(Self::new(QuadratureRule::gauss_hermite(order)?))
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `E tanh(sqrt(gamma) Z + gamma)`, in `[0, 1)`.
    pub fn h(&self, gamma: f64) -> Result<f64> {
        let g = Snr::new(gamma)?.get();
        if g == 0.0 {
            return Ok(0.0);
        }
        let s = g.sqrt();
        Ok(self.rule.expect(|z| (s * z + g).tanh())?.min(1.0))
    }

    /// `1 - h(gamma)`, integrated as `E[2 / (1 + e^{2x})]` so it stays
    /// accurate when `h` is close to one.
    pub fn mmse_v(&self, gamma: f64) -> Result<f64> {
        let g = Snr::new(gamma)?.get();
        if g == 0.0 {
            return Ok(1.0);
        }
        let s = g.sqrt();
        self.rule.expect(|z| 2.0 / (1.0 + (2.0 * (s * z + g)).exp()))
    }

    /// Mutual information of the binary-input channel.
    pub fn i_v(&self, gamma: f64) -> Result<f64> {
        let g = Snr::new(gamma)?.get();
        if g == 0.0 {
            return Ok(0.0);
        }
        let s = g.sqrt();
        if g <= LARGE_SNR {
            let e_log_cosh = self.rule.expect(|z| log_cosh(s * z + g))?;
            return Ok((g - e_log_cosh).clamp(0.0, LN_2));
        }
        // log cosh x = |x| - log 2 + log1p(e^{-2|x|}), and for x ~ N(g, g)
        // E|x| - g = 2 (sqrt(g) phi(sqrt(g)) - g (1 - Phi(sqrt(g)))).
        let abs_excess = 2.0 * (s * normal_pdf(s) - g * normal_sf(s));
        let tail = self
            .rule
            .expect(|z| (-2.0 * (s * z + g).abs()).exp().ln_1p())?;
        Ok((LN_2 - abs_excess - tail).clamp(0.0, LN_2))
    }
}

/// MMSE of a standard Gaussian input.
pub fn mmse_u(gamma: f64) -> Result<f64> {
    let g = Snr::new(gamma)?.get();
    Ok(1.0 / (1.0 + g))
}

/// Mutual information of a standard Gaussian input.
pub fn i_u(gamma: f64) -> Result<f64> {
    let g = Snr::new(gamma)?.get();
    Ok(0.5 * g.ln_1p())
}
