//! Finite-size Monte Carlo for the two-cluster mixture.
//!
//! Data follow `Y_j = V_j U + sigma Z_j` (rows of an `N x D` matrix) with a
//! unit center `U`, Rademacher labels and side information `S_j = V_j` with
//! probability `eta` (else 0). The center is estimated by approximate message
//! passing (AMP), whose state evolution reproduces the fixed point of
//! [`crate::potential`], and fresh points are classified by
//! `sign(<u_hat, Y_new>)`.
//!
//! Randomness: one ChaCha8 generator per purpose, all seeded with the same
//! `seed` and told apart by their stream id (see [`streams`]), so that e.g.
//! changing `M` leaves the training data untouched.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::ModelParams;

/// ChaCha stream ids. Each stream drives exactly one part of the draw.
pub mod streams {
    pub const CENTER: u64 = 0;
    pub const LABELS: u64 = 1;
    pub const SIDE_INFO: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const TEST_LABELS: u64 = 4;
    pub const TEST_NOISE: u64 = 5;
    pub const SPECTRAL_INIT: u64 = 6;
    pub const AMP_INIT: u64 = 7;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rademacher(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sizes {
    pub n: usize,
    pub d: usize,
    pub m: usize,
}

impl Sizes {
    pub const DEFAULT: Sizes = Sizes {
        n: 4000,
        d: 4000,
        m: 20_000,
    };
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// `N x D` observations, one point per row.
    pub y: Array2<f64>,
    pub v: Array1<f64>,
    /// `v_j` where the label is revealed, 0 elsewhere.
    pub s: Array1<f64>,
    /// Unit-norm center.
    pub u: Array1<f64>,
    pub n: usize,
    pub d: usize,
    pub params: ModelParams,
    pub seed: u64,
}

impl Dataset {
    pub fn labeled_count(&self) -> usize {
        self.s.iter().filter(|&&s| s != 0.0).count()
    }
}

/// Held-out points. Only the noise is stored; `y_new = v_new u + sigma z_new`
/// is formed on demand, which halves the memory of an `M x D` test set.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub v_new: Array1<f64>,
    pub z_new: Array2<f64>,
    u: Array1<f64>,
    sigma: f64,
}

impl TestSet {
    pub fn m(&self) -> usize {
        self.v_new.len()
    }

    pub fn d(&self) -> usize {
        self.u.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn y_new_row(&self, i: usize) -> Array1<f64> {
        &self.u * self.v_new[i] + &(&self.z_new.row(i) * self.sigma)
    }

    pub fn y_new(&self) -> Array2<f64> {
        let mut y = &self.z_new * self.sigma;
        for (mut row, &v) in y.rows_mut().into_iter().zip(self.v_new.iter()) {
            row.scaled_add(v, &self.u);
        }
        y
    }

    /// `<w, y_new_i>` for every test point.
    pub fn project(&self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.d(), w.len())?;
        let along_center = self.u.dot(&w);
        let mut out = self.z_new.dot(&w);
        out *= self.sigma;
        out.scaled_add(along_center, &self.v_new);
        Ok(out)
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub fn generate(params: &ModelParams, sizes: Sizes, seed: u64) -> Result<(Dataset, TestSet)> {
    let Sizes { n, d, m } = sizes;
    if n == 0 || d == 0 || m == 0 {
        return Err(Error::invalid(format!("sizes must be positive, got {sizes:?}")));
    }
    let ratio = n as f64 / d as f64;
    if ((ratio - params.alpha) / params.alpha).abs() > 0.01 {
        log::warn!(
            "N/D = {ratio} differs from alpha = {} by more than 1%",
            params.alpha
        );
    }
    let sigma = params.sigma();

    let mut rng = rng_for(seed, streams::CENTER);
    let mut u: Array1<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = u.dot(&u).sqrt();
    u /= norm;

    let mut rng = rng_for(seed, streams::LABELS);
    let v: Array1<f64> = (0..n).map(|_| rademacher(&mut rng)).collect();

    let mut rng = rng_for(seed, streams::SIDE_INFO);
    let s: Array1<f64> = v
        .iter()
        .map(|&vj| if rng.random::<f64>() < params.eta { vj } else { 0.0 })
        .collect();

    let mut rng = rng_for(seed, streams::NOISE);
    let mut y = Array2::<f64>::zeros((n, d));
    for (mut row, &vj) in y.rows_mut().into_iter().zip(v.iter()) {
        for (y_jk, &u_k) in row.iter_mut().zip(u.iter()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *y_jk = vj * u_k + sigma * z;
        }
    }

    let mut rng = rng_for(seed, streams::TEST_LABELS);
    let v_new: Array1<f64> = (0..m).map(|_| rademacher(&mut rng)).collect();
    let mut rng = rng_for(seed, streams::TEST_NOISE);
    let z_new = Array2::from_shape_simple_fn((m, d), || StandardNormal.sample(&mut rng));

    let dataset = Dataset {
        y,
        v,
        s,
        u: u.clone(),
        n,
        d,
        params: *params,
        seed,
    };
    let test = TestSet {
        v_new,
        z_new,
        u,
        sigma,
    };
    Ok((dataset, test))
}

/// Misclassification fraction over `m` test points with its binomial
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalRisk {
    pub risk: f64,
    pub se: f64,
    pub m: usize,
}

impl EmpiricalRisk {
    pub fn from_errors(errors: usize, m: usize) -> Self {
        let risk = errors as f64 / m as f64;
        Self {
            risk,
            se: (risk * (1.0 - risk) / m as f64).sqrt(),
            m,
        }
    }

    /// Risk under the best global label swap, for estimators with no sign reference.
    pub fn sign_fixed(self) -> Self {
        if self.risk > 0.5 {
            Self {
                risk: 1.0 - self.risk,
                ..self
            }
        } else {
            self
        }
    }
}

/// Risk of the linear rule `sign(<w, y_new>)`, with `sign(0) = +1`.
pub fn classify_with(test: &TestSet, w: ArrayView1<f64>) -> Result<EmpiricalRisk> {
    let scores = test.project(w)?;
    let errors = scores
        .iter()
        .zip(test.v_new.iter())
        .filter(|(&score, &v)| (if score >= 0.0 { 1.0 } else { -1.0 }) != v)
        .count();
    Ok(EmpiricalRisk::from_errors(errors, test.m()))
}

pub fn oracle_classify(test: &TestSet, u: ArrayView1<f64>) -> Result<EmpiricalRisk> {
    classify_with(test, u)
}

/// Average of `s_j y_j` over labeled points, or of `v_j y_j` over all points.
pub fn supervised_estimate(dataset: &Dataset, use_all_labels: bool) -> Result<Array1<f64>> {
    let signs = if use_all_labels { &dataset.v } else { &dataset.s };
    let count = signs.iter().filter(|&&x| x != 0.0).count();
    if count == 0 {
        return Err(Error::EmptySupport("no labeled points".into()));
    }
    let mut acc = Array1::<f64>::zeros(dataset.d);
    for (row, &sign) in dataset.y.rows().into_iter().zip(signs.iter()) {
        if sign != 0.0 {
            acc.scaled_add(sign, &row);
        }
    }
    acc /= count as f64;
    Ok(acc)
}

/// `Y^T x` accumulated row by row (contiguous for a row-major `Y`).
fn transpose_matvec(y: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(y.ncols());
    for (row, &xj) in y.rows().into_iter().zip(x.iter()) {
        if xj != 0.0 {
            out.scaled_add(xj, &row);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmpConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Amplitude of a random start on unlabeled `v_hat`; only useful at `eta = 0`.
    pub init_perturbation: f64,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
            init_perturbation: 0.0,
        }
    }
}

/// AMP iterate. `u_hat` lives in the `sqrt(D)`-scaled coordinates where the
/// center has unit-variance entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub u_hat: Array1<f64>,
    pub v_hat: Array1<f64>,
    pub u_var: f64,
    /// Mean of `1 - v_hat_j^2` over unlabeled points.
    pub v_var: f64,
    pub a_u: f64,
    pub a_v: f64,
    pub iteration: usize,
    pub converged: bool,
}

/// Rank-one AMP for `Y = v u~^T / sqrt(D) + sigma Z` with a Gaussian prior on
/// `u~ = sqrt(D) u` and a Rademacher prior on `v` pinned by the labels.
///
/// Each sweep updates `u` then `v`:
///
/// ```text
/// B_u = Y^T v_hat / (sigma^2 sqrt D) - (sum_unlabeled (1 - v_hat_j^2) / (sigma^2 D)) u_hat
/// A_u = sum_j v_hat_j^2 / (sigma^2 D),   u_hat = B_u / (1 + A_u),   u_var = 1 / (1 + A_u)
/// B_v = Y u_hat / (sigma^2 sqrt D) - (u_var / sigma^2) v_hat_prev
/// v_hat_j = s_j if labeled else tanh(B_v,j)
/// ```
pub fn amp_estimate(dataset: &Dataset, config: &AmpConfig) -> Result<AmpState> {
    if config.max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::invalid(format!("tol must be positive, got {}", config.tol)));
    }
    let (n, d) = (dataset.n, dataset.d);
    let sigma2 = dataset.params.sigma2;
    let field_scale = 1.0 / (sigma2 * (d as f64).sqrt());
    let onsager_scale = 1.0 / (sigma2 * d as f64);
    let unlabeled: Vec<bool> = dataset.s.iter().map(|&s| s == 0.0).collect();
    let n_unlabeled = unlabeled.iter().filter(|&&x| x).count();

    let mut v_hat = dataset.s.clone();
    if config.init_perturbation > 0.0 {
        let mut rng = rng_for(dataset.seed, streams::AMP_INIT);
        for (v, &free) in v_hat.iter_mut().zip(&unlabeled) {
            let z: f64 = StandardNormal.sample(&mut rng);
            if free {
                *v = (config.init_perturbation * z).clamp(-1.0, 1.0);
            }
        }
    }
    let mut u_hat = Array1::<f64>::zeros(d);
    let mut state = AmpState {
        u_hat: u_hat.clone(),
        v_hat: v_hat.clone(),
        u_var: 1.0,
        v_var: 0.0,
        a_u: 0.0,
        a_v: 0.0,
        iteration: 0,
        converged: false,
    };

    for iteration in 1..=config.max_iter {
        let v_spread: f64 = v_hat
            .iter()
            .zip(&unlabeled)
            .filter(|(_, &free)| free)
            .map(|(&v, _)| 1.0 - v * v)
            .sum();
        let mut b_u = transpose_matvec(&dataset.y, &v_hat);
        b_u *= field_scale;
        b_u.scaled_add(-onsager_scale * v_spread, &u_hat);
        let a_u = onsager_scale * v_hat.dot(&v_hat);
        let u_var = 1.0 / (1.0 + a_u);
        let u_next = b_u * u_var;

        let mut b_v = dataset.y.dot(&u_next);
        b_v *= field_scale;
        b_v.scaled_add(-u_var / sigma2, &v_hat);
        let v_next: Array1<f64> = b_v
            .iter()
            .zip(dataset.s.iter())
            .map(|(&b, &s)| if s != 0.0 { s } else { b.tanh() })
            .collect();

        if !(u_next.iter().all(|x| x.is_finite()) && v_next.iter().all(|x| x.is_finite())) {
            return Err(Error::NumericalFailure {
                iteration,
                what: "non-finite AMP iterate".into(),
            });
        }
        let change = max_abs_diff(&u_next, &u_hat).max(max_abs_diff(&v_next, &v_hat));
        u_hat = u_next;
        v_hat = v_next;

        let v_var = if n_unlabeled == 0 {
            0.0
        } else {
            v_hat
                .iter()
                .zip(&unlabeled)
                .filter(|(_, &free)| free)
                .map(|(&v, _)| 1.0 - v * v)
                .sum::<f64>()
                / n_unlabeled as f64
        };
        state = AmpState {
            u_hat: u_hat.clone(),
            v_hat: v_hat.clone(),
            u_var,
            v_var,
            a_u,
            a_v: onsager_scale * u_hat.dot(&u_hat),
            iteration,
            converged: change < config.tol,
        };
        if state.converged {
            break;
        }
    }
    debug_assert_eq!(state.v_hat.len(), n);
    Ok(state)
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Conditional means and pooled variance of a per-point statistic, split by
/// the true test label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LlrStats {
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub variance: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl LlrStats {
    fn from_samples(values: &Array1<f64>, labels: &Array1<f64>) -> Self {
        let (mut sum_pos, mut sum_neg, mut n_pos, mut n_neg) = (0.0, 0.0, 0usize, 0usize);
        for (&x, &v) in values.iter().zip(labels.iter()) {
            if v > 0.0 {
                sum_pos += x;
                n_pos += 1;
            } else {
                sum_neg += x;
                n_neg += 1;
            }
        }
        let mean_pos = if n_pos > 0 { sum_pos / n_pos as f64 } else { f64::NAN };
        let mean_neg = if n_neg > 0 { sum_neg / n_neg as f64 } else { f64::NAN };
        let sq: f64 = values
            .iter()
            .zip(labels.iter())
            .map(|(&x, &v)| {
                let c = if v > 0.0 { mean_pos } else { mean_neg };
                (x - c) * (x - c)
            })
            .sum();
        let dof = (n_pos + n_neg).saturating_sub(2).max(1);
        Self {
            mean_pos,
            mean_neg,
            variance: sq / dof as f64,
            n_pos,
            n_neg,
        }
    }

    /// Standard error of `mean_pos + mean_neg` under the pooled variance.
    pub fn symmetry_se(&self) -> f64 {
        (self.variance * (1.0 / self.n_pos.max(1) as f64 + 1.0 / self.n_neg.max(1) as f64)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub risk: EmpiricalRisk,
    /// `<u_hat, u~> / D`, the overlap with the true center in unit-norm coordinates.
    pub overlap_u: f64,
    /// `||u_hat||^2 / D`.
    pub self_overlap_u: f64,
    /// `<v_hat, v> / N`.
    pub overlap_v: f64,
    /// Statistics of `(2 / sigma^2) <u_hat / sqrt D, y_new>`.
    pub llr: LlrStats,
}

/// Classifies the test set with `sign(<u_hat, y_new>)` and measures overlaps
/// against the ground truth of `dataset`.
pub fn classify_new(state: &AmpState, dataset: &Dataset, test: &TestSet) -> Result<EmpiricalReport> {
    check_len(dataset.d, state.u_hat.len())?;
    check_len(dataset.n, state.v_hat.len())?;
    check_len(dataset.d, test.d())?;
    if !state.converged {
        log::warn!("classifying with an AMP state that did not converge");
    }
    let d = dataset.d as f64;
    let risk = classify_with(test, state.u_hat.view())?;
    let mut llr = test.project(state.u_hat.view())?;
    llr *= 2.0 / (dataset.params.sigma2 * d.sqrt());
    Ok(EmpiricalReport {
        risk,
        overlap_u: state.u_hat.dot(&dataset.u) / d.sqrt(),
        self_overlap_u: state.u_hat.dot(&state.u_hat) / d,
        overlap_v: state.v_hat.dot(&dataset.v) / dataset.n as f64,
        llr: LlrStats::from_samples(&llr, &test.v_new),
    })
}

/// Statistics of `L = (2 / sigma) <u_bar, z_new> + (2 / sigma^2) q* v_new`
/// with `u_bar = u_hat / sqrt(D)`; their limits are `+-2 q* / sigma^2` and
/// `4 q* / sigma^2`.
pub fn llr_statistics(state: &AmpState, test: &TestSet, q_star: f64, sigma2: f64) -> Result<LlrStats> {
    check_len(test.d(), state.u_hat.len())?;
    let d = state.u_hat.len() as f64;
    let sigma = sigma2.sqrt();
    let mut values = test.z_new.dot(&state.u_hat);
    values *= 2.0 / (sigma * d.sqrt());
    values.scaled_add(2.0 * q_star / sigma2, &test.v_new);
    Ok(LlrStats::from_samples(&values, &test.v_new))
}

/// Leading right singular vector of `Y` by power iteration on `Y^T Y`,
/// unit-norm. With labels present the sign is aligned so that labeled points
/// project positively on average; otherwise the sign is arbitrary and risks
/// should be read through [`EmpiricalRisk::sign_fixed`].
pub fn spectral_estimate(dataset: &Dataset, iters: usize) -> Result<Array1<f64>> {
    if iters == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    let mut rng = rng_for(dataset.seed, streams::SPECTRAL_INIT);
    let mut w: Array1<f64> = (0..dataset.d).map(|_| StandardNormal.sample(&mut rng)).collect();
    for _ in 0..iters {
        let scores = dataset.y.dot(&w);
        w = transpose_matvec(&dataset.y, &scores);
        let norm = w.dot(&w).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NumericalFailure {
                iteration: 0,
                what: "power iteration collapsed".into(),
            });
        }
        w /= norm;
    }
    if dataset.labeled_count() > 0 {
        let scores = dataset.y.dot(&w);
        if dataset.s.dot(&scores) < 0.0 {
            w.mapv_inplace(|x| -x);
        }
    }
    Ok(w)
}

/// Everything measured on one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateReport {
    pub seed: u64,
    pub amp: EmpiricalReport,
    pub llr_proxy: LlrStats,
    pub oracle: EmpiricalRisk,
    pub supervised_labeled: Option<EmpiricalRisk>,
    pub supervised_full: EmpiricalRisk,
    pub iterations: usize,
    pub converged: bool,
}

/// Generates one replicate and runs every estimator on it. `q_star` feeds
/// the LLR proxy and should come from the analytic solver.
pub fn run_replicate(
    params: &ModelParams,
    sizes: Sizes,
    seed: u64,
    amp: &AmpConfig,
    q_star: f64,
) -> Result<ReplicateReport> {
    let (dataset, test) = generate(params, sizes, seed)?;
    let state = amp_estimate(&dataset, amp)?;
    let report = classify_new(&state, &dataset, &test)?;
    let llr_proxy = llr_statistics(&state, &test, q_star, params.sigma2)?;
    let oracle = oracle_classify(&test, dataset.u.view())?;
    let supervised_labeled = match supervised_estimate(&dataset, false) {
        Ok(w) => Some(classify_with(&test, w.view())?),
        Err(Error::EmptySupport(_)) => None,
        Err(e) => return Err(e),
    };
    let full = supervised_estimate(&dataset, true)?;
    Ok(ReplicateReport {
        seed,
        amp: report,
        llr_proxy,
        oracle,
        supervised_labeled,
        supervised_full: classify_with(&test, full.view())?,
        iterations: state.iteration,
        converged: state.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, sigma2: f64, eta: f64) -> ModelParams {
        ModelParams::new(alpha, sigma2, eta).unwrap()
    }

    fn small() -> Sizes {
        Sizes { n: 300, d: 300, m: 500 }
    }

    #[test]
    fn rejects_zero_sizes() {
        let params = p(1.0, 0.9, 0.2);
        for sizes in [
            Sizes { n: 0, d: 10, m: 10 },
            Sizes { n: 10, d: 0, m: 10 },
            Sizes { n: 10, d: 10, m: 0 },
        ] {
            assert!(matches!(generate(&params, sizes, 1), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn generated_data_invariants() {
        let params = p(1.0, 0.9, 0.3);
        let (ds, test) = generate(&params, small(), 42).unwrap();
        assert!((ds.u.dot(&ds.u) - 1.0).abs() < 1e-12);
        for (&s, &v) in ds.s.iter().zip(ds.v.iter()) {
            assert!(s == 0.0 || s == v);
            assert!(v == 1.0 || v == -1.0);
        }
        let frac = ds.labeled_count() as f64 / ds.n as f64;
        assert!((frac - 0.3).abs() < 5.0 / (ds.n as f64).sqrt());
        let y = test.y_new();
        for i in [0, 17, 499] {
            let expected = &ds.u * test.v_new[i] + &(&test.z_new.row(i) * params.sigma());
            assert_eq!(y.row(i), expected);
            assert_eq!(test.y_new_row(i), expected);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = p(1.0, 0.9, 0.3);
        let (a, ta) = generate(&params, small(), 7).unwrap();
        let (b, tb) = generate(&params, small(), 7).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.s, b.s);
        assert_eq!(ta.z_new, tb.z_new);
        let (c, _) = generate(&params, small(), 8).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn streams_are_independent_of_test_size() {
        let params = p(1.0, 0.9, 0.3);
        let (a, _) = generate(&params, small(), 7).unwrap();
        let (b, _) = generate(&params, Sizes { m: 10, ..small() }, 7).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn label_concentration() {
        let params = p(1.0, 0.9, 0.2);
        let sizes = Sizes { n: 10_000, d: 8, m: 1 };
        let (ds, _) = generate(&params, sizes, 3).unwrap();
        let n = ds.n as f64;
        assert!(ds.v.sum().abs() / n < 4.0 / n.sqrt());
        let frac = ds.labeled_count() as f64 / n;
        assert!((frac - 0.2).abs() < 4.0 * (0.2_f64 * 0.8 / n).sqrt());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, test) = generate(&p(1.0, 0.9, 0.2), small(), 1).unwrap();
        let w = Array1::<f64>::zeros(7);
        assert!(matches!(
            classify_with(&test, w.view()),
            Err(Error::DimensionMismatch { expected: 300, got: 7 })
        ));
    }

    #[test]
    fn supervised_estimate_cases() {
        let (ds, _) = generate(&p(1.0, 0.9, 1.0), small(), 2).unwrap();
        assert_eq!(
            supervised_estimate(&ds, true).unwrap(),
            supervised_estimate(&ds, false).unwrap()
        );
        let (ds, _) = generate(&p(1.0, 0.9, 0.0), small(), 2).unwrap();
        assert!(matches!(supervised_estimate(&ds, false), Err(Error::EmptySupport(_))));
        assert!(supervised_estimate(&ds, true).is_ok());
    }

    #[test]
    fn amp_argument_checks() {
        let (ds, _) = generate(&p(1.0, 0.9, 0.2), small(), 2).unwrap();
        let bad = AmpConfig { max_iter: 0, ..AmpConfig::default() };
        assert!(amp_estimate(&ds, &bad).is_err());
        let bad = AmpConfig { tol: 0.0, ..AmpConfig::default() };
        assert!(amp_estimate(&ds, &bad).is_err());
    }

    #[test]
    fn amp_pins_labels_and_bounds_estimates() {
        let (ds, _) = generate(&p(1.0, 0.9, 0.4), small(), 9).unwrap();
        let state = amp_estimate(&ds, &AmpConfig::default()).unwrap();
        for (&vh, &s) in state.v_hat.iter().zip(ds.s.iter()) {
            assert!(vh.abs() <= 1.0);
            if s != 0.0 {
                assert_eq!(vh, s);
            }
        }
        assert!(state.a_u >= 0.0 && state.a_v >= 0.0);
        assert!(state.u_var > 0.0 && state.u_var <= 1.0);
    }

    #[test]
    fn amp_fully_labeled_is_rescaled_supervised_average() {
        let (ds, _) = generate(&p(1.0, 0.9, 1.0), small(), 4).unwrap();
        let one = AmpConfig { max_iter: 1, ..AmpConfig::default() };
        let state = amp_estimate(&ds, &one).unwrap();
        assert_eq!(state.v_hat, ds.v);
        let avg = supervised_estimate(&ds, true).unwrap();
        let ratio = state.u_hat[0] / avg[0];
        for (a, b) in state.u_hat.iter().zip(avg.iter()) {
            assert!((a - ratio * b).abs() < 1e-10 * ratio.abs());
        }
    }

    #[test]
    fn amp_stays_at_zero_without_labels_or_signal() {
        let (ds, _) = generate(&p(1.0, 1e6, 0.0), small(), 4).unwrap();
        let state = amp_estimate(&ds, &AmpConfig::default()).unwrap();
        assert!(state.u_hat.dot(&state.u_hat).sqrt() <= 1e-6);
        assert!(state.converged);
    }

    #[test]
    fn oracle_classifier_limits() {
        let sizes = Sizes { n: 4, d: 50, m: 10_000 };
        let (ds, test) = generate(&p(1.0, 1e-8, 0.5), sizes, 5).unwrap();
        assert_eq!(oracle_classify(&test, ds.u.view()).unwrap().risk, 0.0);
    }

    #[test]
    fn llr_stats_pooled_variance() {
        let values = Array1::from(vec![1.0, 3.0, -1.0, -3.0]);
        let labels = Array1::from(vec![1.0, 1.0, -1.0, -1.0]);
        let s = LlrStats::from_samples(&values, &labels);
        assert_eq!((s.mean_pos, s.mean_neg), (2.0, -2.0));
        assert_eq!(s.variance, 4.0 / 2.0);
    }

    #[test]
    fn sign_fixed_risk() {
        let r = EmpiricalRisk::from_errors(70, 100).sign_fixed();
        assert!((r.risk - 0.3).abs() < 1e-15);
        assert!((r.se - (0.21_f64 / 100.0).sqrt()).abs() < 1e-15);
    }
}
