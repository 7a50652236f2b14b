//! The scalar potential
//!
//! ```text
//! f(q) = alpha (1 - eta) i_v(q / sigma^2) + alpha / (2 sigma^2) (1 - q) - (q + log(1 - q)) / 2
//! ```
//!
//! whose unique minimizer `q*` on `[0, 1)` is the limiting overlap between
//! the posterior mean of the center and the true center. Its stationarity
//! condition is the fixed point `q = F(q)` of
//!
//! ```text
//! F(q) = alpha (eta + (1 - eta) h(q / sigma^2)) / (sigma^2 + alpha (eta + (1 - eta) h(q / sigma^2)))
//! ```
//!
//! [`solve_q_star`] computes `q*` twice: once by iterating `F` (which only
//! touches `h`) and once by minimizing `f` (which only touches `i_v`) followed
//! by a bisection on `f'`, and refuses to answer when the two disagree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar_channels::ScalarChannels;

/// Largest admissible overlap; keeps `log(1 - q)` finite.
pub const Q_MAX: f64 = 1.0 - 1e-12;

pub const FIXED_POINT_TOL: f64 = 1e-13;
pub const FIXED_POINT_DAMPING: f64 = 0.5;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;
pub const METHOD_GAP_TOL: f64 = 1e-8;

/// One problem instance `(alpha, sigma^2, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub sigma2: f64,
    pub eta: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, sigma2: f64, eta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self { alpha, sigma2, eta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.alpha, self.sigma2, eta)
    }
}

/// Limits of `<u_bar, U>` and `<v_bar, V> / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlaps {
    pub q_u: f64,
    pub q_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub q_star: f64,
    pub f_min: f64,
    /// Outer iterations of the fixed-point route.
    pub iterations: usize,
    pub method_gap: f64,
    pub q_fixed_point: f64,
    pub q_minimizer: f64,
    pub overlaps: Overlaps,
}

fn check_q(q: f64, upper: f64) -> Result<()> {
    if q.is_nan() || q < 0.0 || q > upper {
        return Err(Error::invalid(format!("overlap q = {q} outside [0, {upper}]")));
    }
    Ok(())
}

pub fn potential_f(ch: &ScalarChannels, q: f64, params: &ModelParams) -> Result<f64> {
    check_q(q, Q_MAX)?;
    let ModelParams { alpha, sigma2, eta } = *params;
    let info = if eta < 1.0 { ch.i_v(q / sigma2)? } else { 0.0 };
    Ok(alpha * (1.0 - eta) * info + alpha / (2.0 * sigma2) * (1.0 - q)
        - 0.5 * (q + (-q).ln_1p()))
}

pub fn potential_f_prime(ch: &ScalarChannels, q: f64, params: &ModelParams) -> Result<f64> {
    check_q(q, Q_MAX)?;
    let ModelParams { alpha, sigma2, eta } = *params;
    let scale = alpha / (2.0 * sigma2);
    let mmse = if eta < 1.0 { ch.mmse_v(q / sigma2)? } else { 0.0 };
    Ok(scale * (1.0 - eta) * mmse - scale + q / (2.0 * (1.0 - q)))
}

pub fn fixed_point_map(ch: &ScalarChannels, q: f64, params: &ModelParams) -> Result<f64> {
    check_q(q, 1.0)?;
    let ModelParams { alpha, sigma2, eta } = *params;
    let h = if eta < 1.0 { ch.h(q / sigma2)? } else { 0.0 };
    let signal = alpha * (eta + (1.0 - eta) * h);
    Ok(signal / (sigma2 + signal))
}

/// Unique minimizer of the potential for `eta > 0`.
pub fn solve_q_star(ch: &ScalarChannels, params: &ModelParams) -> Result<SolveReport> {
    if params.eta <= 0.0 {
        return Err(Error::invalid(
            "eta = 0 has no unique minimizer; use unlabeled_minimizer",
        ));
    }
    let (q_fp, iterations) = solve_fixed_point(ch, params)?;
    let q_min = minimization_route(ch, params)?;
    let method_gap = (q_fp - q_min).abs();
    if method_gap > METHOD_GAP_TOL {
        return Err(Error::MethodDisagreement {
            fixed_point: q_fp,
            minimizer: q_min,
        });
    }
    let q_star = q_fp.min(Q_MAX);
    let q_v = 1.0 - (1.0 - params.eta) * ch.mmse_v(q_star / params.sigma2)?;
    Ok(SolveReport {
        q_star,
        f_min: potential_f(ch, q_star, params)?,
        iterations,
        method_gap,
        q_fixed_point: q_fp,
        q_minimizer: q_min,
        overlaps: Overlaps { q_u: q_star, q_v },
    })
}

/// Damped iteration of `F` from `F(0)`, with an Aitken extrapolation when
/// the contraction is slow (near the spectral threshold with few labels).
/// Every evaluated point tightens a bracket on the fixed point, and
/// extrapolations that leave the bracket are discarded. Returns the fixed
/// point and the number of outer iterations.
pub fn solve_fixed_point(ch: &ScalarChannels, params: &ModelParams) -> Result<(f64, usize)> {
    let gap = |q: f64| -> Result<f64> { Ok(fixed_point_map(ch, q, params)? - q) };
    // F(q) - q is positive left of the fixed point and negative right of it.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut q = fixed_point_map(ch, 0.0, params)?;
    let mut residual = f64::INFINITY;
    for iteration in 1..=FIXED_POINT_MAX_ITER {
        let g0 = gap(q)?;
        residual = g0.abs();
        if residual <= FIXED_POINT_TOL {
            return Ok((q, iteration));
        }
        update_bracket(q, g0, &mut lo, &mut hi);

        let q1 = q + FIXED_POINT_DAMPING * g0;
        let g1 = gap(q1)?;
        if g1.abs() <= FIXED_POINT_TOL {
            return Ok((q1, iteration));
        }
        update_bracket(q1, g1, &mut lo, &mut hi);
        let q2 = q1 + FIXED_POINT_DAMPING * g1;

        let (d1, d2) = (q1 - q, q2 - q1);
        let ratio = d2 / d1;
        let mut next = q2;
        if ratio.is_finite() && ratio > 0.0 && ratio < 1.0 {
            let extrapolated = q2 + d2 * ratio / (1.0 - ratio);
            if extrapolated > lo && extrapolated < hi {
                next = extrapolated;
            }
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        q = next;
    }
    Err(Error::SolverFailure {
        iterations: FIXED_POINT_MAX_ITER,
        last: q,
        residual,
    })
}

fn update_bracket(q: f64, gap: f64, lo: &mut f64, hi: &mut f64) {
    if gap > 0.0 {
        *lo = lo.max(q);
    } else {
        *hi = hi.min(q);
    }
}

/// Golden-section search on `f`, then bisection on `f'` around the result.
fn minimization_route(ch: &ScalarChannels, params: &ModelParams) -> Result<f64> {
    let f = |q: f64| potential_f(ch, q, params);
    let x = golden_section(f, 0.0, Q_MAX, 1e-12)?;
    refine_stationary(ch, params, x)
}

fn golden_section<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection on `f'` in a bracket grown around `guess`; returns 0 when
/// `f'(0) >= 0` (the potential then increases from the origin).
fn refine_stationary(ch: &ScalarChannels, params: &ModelParams, guess: f64) -> Result<f64> {
    let fp = |q: f64| potential_f_prime(ch, q, params);
    if fp(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    let mut width = 1e-7;
    let (mut a, mut b);
    loop {
        a = (guess - width).max(0.0);
        b = (guess + width).min(Q_MAX);
        if fp(a)? < 0.0 && fp(b)? > 0.0 {
            break;
        }
        if a == 0.0 && b == Q_MAX {
            // f' < 0 on the whole domain would mean the minimum sits at the clamp.
            return Ok(Q_MAX);
        }
        width *= 4.0;
    }
    bisect_sign_change(fp, a, b)
}

/// Bisection for a `-` to `+` sign change of `g` on `[a, b]`.
pub(crate) fn bisect_sign_change<G: Fn(f64) -> Result<f64>>(
    g: G,
    mut a: f64,
    mut b: f64,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let value = g(mid)?;
        if value == 0.0 {
            return Ok(mid);
        }
        if value < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Global minimizer of the potential at `eta = 0`.
///
/// `q = 0` is always stationary there, so the interior stationary point (if
/// `f'` changes sign on `[1e-9, Q_MAX]`) is compared against `f(0)`.
pub fn unlabeled_minimizer(ch: &ScalarChannels, alpha: f64, sigma2: f64) -> Result<f64> {
    let params = ModelParams::new(alpha, sigma2, 0.0)?;
    let fp = |q: f64| potential_f_prime(ch, q, &params);
    let grid = scan_grid();
    let mut prev = (grid[0], fp(grid[0])?);
    let mut interior = None;
    for &q in &grid[1..] {
        let value = fp(q)?;
        if prev.1 < 0.0 && value >= 0.0 {
            interior = Some(bisect_sign_change(fp, prev.0, q)?);
            break;
        }
        prev = (q, value);
    }
    match interior {
        Some(q) if potential_f(ch, q, &params)? < potential_f(ch, 0.0, &params)? => Ok(q),
        _ => Ok(0.0),
    }
}

/// Geometric points from 1e-9 to 1/2, then geometric in `1 - q` down to `1 - Q_MAX`.
fn scan_grid() -> Vec<f64> {
    const PER_SIDE: usize = 400;
    let mut grid = Vec::with_capacity(2 * PER_SIDE);
    let (lo, mid) = (1e-9_f64.ln(), 0.5_f64.ln());
    for k in 0..PER_SIDE {
        grid.push((lo + (mid - lo) * k as f64 / PER_SIDE as f64).exp());
    }
    let end = (1.0 - Q_MAX).ln();
    for k in 0..=PER_SIDE {
        grid.push(1.0 - (mid + (end - mid) * k as f64 / PER_SIDE as f64).exp());
    }
    grid
}

/// `lim (1/N) I(U, V; Y | S)`, the minimum of the potential.
pub fn mutual_info_limit(ch: &ScalarChannels, params: &ModelParams) -> Result<f64> {
    let q = if params.eta > 0.0 {
        solve_q_star(ch, params)?.q_star
    } else {
        unlabeled_minimizer(ch, params.alpha, params.sigma2)?
    };
    potential_f(ch, q, params)
}
