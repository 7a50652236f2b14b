//! The acceptance suite: analytic anchors, solver agreement, the I-MMSE
//! convention, risk ordering, Monte Carlo agreement and determinism.
//!
//! Each criterion yields one [`CriterionResult`]; the suite passes iff all
//! do. `quick` keeps only the analytic criteria.

use std::time::{Duration, Instant};

use bayesrisk_core::potential::{potential_f_prime, solve_fixed_point, solve_q_star, unlabeled_minimizer};
use bayesrisk_core::risk::{bayes_risk_ssl, oracle_risk, supervised_full_risk, sweep, unsupervised_risk};
use bayesrisk_core::scalar_channels::I_MMSE_FACTOR;
use bayesrisk_core::{ModelParams, ScalarChannels, SweepAxis, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{self, SimulationOutput};
use crate::config::RunConfig;
use crate::error::Result;

/// `1 - Phi(1)` to 17 digits (30-digit reference evaluation).
const ORACLE_RISK_AT_UNIT_NOISE: f64 = 0.158_655_253_931_457_05;

/// Fixed seed for the random parameter draws.
const PARAMETER_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<24} {:>8.2}s / {:>4.0}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub quick: bool,
    pub criteria: Vec<CriterionResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<String> {
        self.criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.id.to_string())
            .collect()
    }

    pub fn table(&self) -> String {
        self.criteria.iter().map(|c| c.line() + "\n").collect()
    }
}

/// Outcome of one check body: pass flag and a human-readable summary.
type Outcome = Result<(bool, String)>;

fn timed(id: &'static str, budget: Duration, body: impl FnOnce() -> Outcome) -> CriterionResult {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        passed = false;
        detail = format!("over time budget; {detail}");
    }
    CriterionResult {
        id,
        passed,
        detail,
        seconds: elapsed.as_secs_f64(),
        budget_seconds: budget.as_secs_f64(),
    }
}

fn params(alpha: f64, sigma2: f64, eta: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(alpha, sigma2, eta)?)
}

/// `(alpha, sigma^2)` uniform on `[0.1, 10] x [0.05, 5]`.
fn random_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(0.1..=10.0), rng.random_range(0.05..=5.0))
}

pub fn closed_form_anchors(ch: &ScalarChannels) -> Outcome {
    let q = solve_q_star(ch, &params(1.0, 0.9, 1.0)?)?.q_star;
    let q_gap = (q - 1.0 / 1.9).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(PARAMETER_SEED);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let (alpha, sigma2) = random_pair(&mut rng);
        let ssl = bayes_risk_ssl(ch, &params(alpha, sigma2, 1.0)?)?;
        worst = worst.max((ssl - supervised_full_risk(alpha, sigma2)?).abs());
    }
    let oracle_gap = (oracle_risk(1.0)? - ORACLE_RISK_AT_UNIT_NOISE).abs();
    let passed = q_gap <= 1e-10 && worst <= 1e-10 && oracle_gap <= 1e-9;
    Ok((
        passed,
        format!("|q*-1/1.9| = {q_gap:.1e}, max |ssl-supervised| = {worst:.1e} (50 pairs), |oracle-ref| = {oracle_gap:.1e}"),
    ))
}

pub fn solver_agreement(ch: &ScalarChannels) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(PARAMETER_SEED + 1);
    let triples: Vec<(f64, f64, f64)> = (0..200)
        .map(|_| {
            let (alpha, sigma2) = random_pair(&mut rng);
            // eta in (0, 1]
            let eta = 1.0 - rng.random::<f64>();
            (alpha, sigma2, eta)
        })
        .collect();
    let last = 1.0 - 1e-6;
    let results: Vec<Result<(f64, usize)>> = triples
        .par_iter()
        .map(|&(alpha, sigma2, eta)| {
            let p = params(alpha, sigma2, eta)?;
            let gap = solve_q_star(ch, &p)?.method_gap;
            let mut changes = 0;
            let mut prev = potential_f_prime(ch, 0.0, &p)? < 0.0;
            for k in 1..10_000 {
                let negative = potential_f_prime(ch, last * k as f64 / 9999.0, &p)? < 0.0;
                changes += usize::from(negative != prev);
                prev = negative;
            }
            Ok((gap, changes))
        })
        .collect();
    let mut worst_gap = 0.0_f64;
    let mut bad = Vec::new();
    for (triple, r) in triples.iter().zip(results) {
        match r {
            Ok((gap, changes)) => {
                worst_gap = worst_gap.max(gap);
                if gap > 1e-8 || changes != 1 {
                    bad.push(format!("{triple:?}: gap {gap:.1e}, {changes} sign changes"));
                }
            }
            Err(e) => bad.push(format!("{triple:?}: {e}")),
        }
    }
    let mut detail = format!("200 triples, max method gap {worst_gap:.1e}");
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; {} failing, first {first}", bad.len()));
    }
    Ok((bad.is_empty(), detail))
}

/// SNR grid of the I-MMSE check.
pub const I_MMSE_GRID: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Picks the constant `c` in `i_v' = c mmse_v` that makes the derivative of
/// the potential vanish at the fixed point of `F`, then checks the relation
/// by central differences on [`I_MMSE_GRID`].
pub fn i_mmse(ch: &ScalarChannels) -> Outcome {
    let p = params(1.0, 0.9, 0.2)?;
    let (q, _) = solve_fixed_point(ch, &p)?;
    let ModelParams { alpha, sigma2, eta } = p;
    let mmse_at_q = ch.mmse_v(q / sigma2)?;
    let f_prime = |c: f64| {
        (alpha / sigma2) * (1.0 - eta) * c * mmse_at_q - alpha / (2.0 * sigma2) + q / (2.0 * (1.0 - q))
    };
    let (c, stationarity) = [0.5, 1.0]
        .into_iter()
        .map(|c| (c, f_prime(c).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");

    let step = 1e-4;
    let mut worst = 0.0_f64;
    for g in I_MMSE_GRID {
        let derivative = (ch.i_v(g + step)? - ch.i_v(g - step)?) / (2.0 * step);
        worst = worst.max((derivative - c * ch.mmse_v(g)?).abs());
    }
    let passed = stationarity <= 1e-8 && c == I_MMSE_FACTOR && worst <= 1e-6;
    Ok((
        passed,
        format!("gate picks c = {c} (|f'(q*)| = {stationarity:.1e}), max |di_v - c mmse_v| = {worst:.1e}"),
    ))
}

pub fn ordering_and_limits(ch: &ScalarChannels) -> Outcome {
    let mut problems = Vec::new();

    let eta_sweep = SweepSpec::linspace(SweepAxis::Eta, 0.02, 1.0, 50, params(1.0, 0.9, 0.2)?)?;
    let noise_sweep = SweepSpec::linspace(SweepAxis::InvSigma2, 0.1, 5.0, 50, params(1.0, 0.9, 0.2)?)?;
    for spec in [&eta_sweep, &noise_sweep] {
        for (value, report) in spec.grid.iter().zip(sweep(ch, spec)?) {
            for v in report.ordering_violations(1e-10) {
                problems.push(format!("{} = {value}: {v}", spec.axis.name()));
            }
        }
    }

    // vanishing labels above the spectral threshold
    let mut worst_limit = 0.0_f64;
    for p in noise_sweep.points()? {
        if p.alpha / (p.sigma2 * p.sigma2) <= 1.0 {
            continue;
        }
        let ssl = bayes_risk_ssl(ch, &p.with_eta(1e-8)?)?;
        let gap = (ssl - unsupervised_risk(ch, p.alpha, p.sigma2)?).abs();
        worst_limit = worst_limit.max(gap);
    }
    if worst_limit > 1e-3 {
        problems.push(format!("|ssl(eta = 1e-8) - unsupervised| = {worst_limit:.2e}"));
    }

    // location of the unlabeled threshold at alpha = 1
    let informative = |sigma2: f64| -> Result<bool> { Ok(unlabeled_minimizer(ch, 1.0, sigma2)? > 0.0) };
    let (mut lo, mut hi) = (0.5, 2.0);
    if !informative(lo)? || informative(hi)? {
        problems.push("threshold not bracketed by sigma2 in [0.5, 2]".into());
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if informative(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    if (threshold - 1.0).abs() > 1e-3 {
        problems.push(format!("threshold at sigma2 = {threshold}"));
    }

    let mut detail = format!(
        "100 swept points, max |ssl(1e-8)-unsupervised| = {worst_limit:.1e}, threshold sigma2 = {threshold:.6}"
    );
    if let Some(first) = problems.first() {
        detail.push_str(&format!("; {} problems, first: {first}", problems.len()));
    }
    Ok((problems.is_empty(), detail))
}

/// The Monte Carlo configuration: the given sizes, seeds and threads at
/// `alpha = 1`, `sigma^2 = 0.9`, `eta = 0.2`.
pub fn monte_carlo_config(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        alpha: 1.0,
        sigma2: 0.9,
        eta: 0.2,
        amp: Default::default(),
        ..cfg.clone()
    }
}

fn describe(out: &SimulationOutput, names: &[&str]) -> (bool, String) {
    let s = &out.summary;
    let mut passed = s.succeeded == s.seeds.len();
    let mut parts = vec![format!("{}/{} seeds", s.succeeded, s.seeds.len())];
    for name in names {
        match s.check(name) {
            Some(c) => {
                passed &= c.pass;
                let unit = if c.relative { " rel" } else { "" };
                parts.push(format!("{name} {:.4} vs {:.4} (tol {}{unit})", c.value, c.target, c.tolerance));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (passed, parts.join(", "))
}

pub fn determinism(cfg: &RunConfig) -> Outcome {
    let small = RunConfig {
        sizes: bayesrisk_core::simulator::Sizes { n: 300, d: 300, m: 2000 },
        seeds: vec![11, 12, 13],
        threads: 1,
        ..monte_carlo_config(cfg)
    };
    let first = commands::simulate(&small)?;
    let second = commands::simulate(&small)?;
    let wide = commands::simulate(&RunConfig {
        threads: 2,
        ..small.clone()
    })?;
    let same = first.csv.as_bytes() == second.csv.as_bytes();
    let across_threads = first.csv.as_bytes() == wide.csv.as_bytes();
    Ok((
        same && across_threads,
        format!(
            "repeat identical: {same}, 1 vs 2 threads identical: {across_threads} ({} bytes)",
            first.csv.len()
        ),
    ))
}

/// Runs the suite. Sizes, seeds, threads and quadrature come from `cfg`;
/// the parameter points are fixed by the suite itself.
pub fn run(cfg: &RunConfig) -> Result<ValidationReport> {
    let ch = cfg.channels()?;
    let pool = cfg.pool()?;
    let secs = Duration::from_secs;
    let mut criteria = Vec::new();
    pool.install(|| {
        criteria.push(timed("closed_form_anchors", secs(1), || closed_form_anchors(&ch)));
        criteria.push(timed("solver_agreement", secs(30), || solver_agreement(&ch)));
        criteria.push(timed("i_mmse", secs(5), || i_mmse(&ch)));
        criteria.push(timed("ordering_and_limits", secs(60), || ordering_and_limits(&ch)));
    });
    if !cfg.quick {
        let mc_cfg = monte_carlo_config(cfg);
        let start = Instant::now();
        let run = commands::simulate(&mc_cfg);
        let elapsed = start.elapsed();
        let budget = secs(600);
        let mut push = |id: &'static str, names: &[&str]| {
            let (mut passed, mut detail) = match &run {
                Ok(out) => describe(out, names),
                Err(e) => (false, format!("error: {e}")),
            };
            if elapsed > budget {
                passed = false;
                detail = format!("over time budget; {detail}");
            }
            criteria.push(CriterionResult {
                id,
                passed,
                detail,
                seconds: elapsed.as_secs_f64(),
                budget_seconds: budget.as_secs_f64(),
            });
        };
        push("monte_carlo", &["risk", "overlap_u", "supervised_labeled_risk"]);
        push("llr_proxy", &["proxy_mean_pos", "proxy_mean_neg", "proxy_var"]);
        criteria.push(timed("determinism", secs(120), || determinism(cfg)));
    }
    Ok(ValidationReport {
        schema_version: commands::SCHEMA_VERSION,
        quick: cfg.quick,
        criteria,
    })
}
