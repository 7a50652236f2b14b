//! The subcommands, as functions from a [`RunConfig`] to file contents.
//! Writing to disk or stdout happens in [`emit`].

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use bayesrisk_core::potential::unlabeled_minimizer;
use bayesrisk_core::risk::{oracle_risk, supervised_full_risk, sweep, unsupervised_risk};
use bayesrisk_core::simulator::{run_replicate, AmpConfig, ReplicateReport, Sizes};
use bayesrisk_core::{ModelParams, RiskReport, SweepSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::format::{g12, line};

pub const RISK_COLUMNS: [&str; 6] = [
    "oracle",
    "supervised_full",
    "supervised_labeled",
    "unsupervised",
    "semi_supervised",
    "q_star",
];

pub const CURVE_HEADER: &str =
    "axis_value,oracle,supervised_full,supervised_labeled,unsupervised,semi_supervised,q_star";

pub const SIMULATE_COLUMNS: [&str; 18] = [
    "seed",
    "status",
    "risk",
    "risk_se",
    "overlap_u",
    "self_overlap_u",
    "overlap_v",
    "llr_mean_pos",
    "llr_mean_neg",
    "llr_var",
    "proxy_mean_pos",
    "proxy_mean_neg",
    "proxy_var",
    "oracle_risk",
    "supervised_labeled_risk",
    "supervised_full_risk",
    "iterations",
    "converged",
];

pub const SCHEMA_VERSION: u32 = 1;

fn risk_fields(r: &RiskReport) -> impl Iterator<Item = String> {
    [
        r.oracle,
        r.supervised_full,
        r.supervised_labeled,
        r.unsupervised,
        r.semi_supervised,
        r.q_star,
    ]
    .into_iter()
    .map(g12)
}

fn require_labels(params: &ModelParams) -> Result<()> {
    if params.eta <= 0.0 {
        return Err(HarnessError::usage(
            "eta must be positive (the semi-supervised risk is defined for eta > 0)",
        ));
    }
    Ok(())
}

/// One-row CSV with all five risks at a single parameter point.
pub fn risk(cfg: &RunConfig) -> Result<String> {
    let params = cfg.params()?;
    require_labels(&params)?;
    let ch = cfg.channels()?;
    let report = RiskReport::compute(&ch, &params)?;
    let mut out = line(["alpha", "sigma2", "eta"].into_iter().chain(RISK_COLUMNS));
    out.push_str(&line(
        [params.alpha, params.sigma2, params.eta]
            .into_iter()
            .map(g12)
            .chain(risk_fields(&report)),
    ));
    Ok(out)
}

/// Risks along one axis.
pub fn curve(cfg: &RunConfig) -> Result<String> {
    let spec = cfg.sweep()?;
    let ch = cfg.channels()?;
    let reports = cfg.pool()?.install(|| sweep(&ch, &spec))?;
    let mut out = format!("{CURVE_HEADER}\n");
    for (value, report) in spec.grid.iter().zip(&reports) {
        out.push_str(&line([g12(*value)].into_iter().chain(risk_fields(report))));
    }
    Ok(out)
}

/// Risks on a two-axis grid, long format. Rows are grouped by the second
/// axis; each group is exactly the `curve` computation at that value.
pub fn phase(cfg: &RunConfig) -> Result<String> {
    if cfg.axis == cfg.axis2 {
        return Err(HarnessError::usage(format!(
            "--axis and --axis2 must differ (both are {})",
            cfg.axis.name()
        )));
    }
    let base = cfg.params()?;
    let ch = cfg.channels()?;
    let first = cfg.sweep()?;
    let g2 = cfg.grid2;
    let second = SweepSpec::linspace(cfg.axis2, g2.start, g2.stop, g2.points, base)?;
    let pool = cfg.pool()?;
    let mut out = line([cfg.axis.name(), cfg.axis2.name()].into_iter().chain(RISK_COLUMNS));
    for (&v2, slice_base) in second.grid.iter().zip(second.points()?) {
        let spec = SweepSpec::new(cfg.axis, first.grid.clone(), slice_base)?;
        let reports = pool.install(|| sweep(&ch, &spec))?;
        for (v1, report) in spec.grid.iter().zip(&reports) {
            out.push_str(&line([g12(*v1), g12(v2)].into_iter().chain(risk_fields(report))));
        }
    }
    Ok(out)
}

/// Mean and standard error over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    /// `None` with fewer than two seeds.
    pub se: Option<f64>,
    pub count: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        let mean = values.iter().sum::<f64>() / k as f64;
        let se = (k >= 2).then(|| {
            let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        });
        Self { mean, se, count: k }
    }
}

/// Analytic large-size predictions at the simulated point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analytic {
    pub q_star: f64,
    pub semi_supervised: f64,
    pub oracle: f64,
    pub supervised_full: f64,
    pub supervised_labeled: Option<f64>,
    pub unsupervised: f64,
    pub llr_mean: f64,
    pub llr_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// Tolerance is relative to `|target|` rather than absolute.
    pub relative: bool,
    pub pass: bool,
}

impl Check {
    fn absolute(name: &'static str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            target,
            tolerance,
            relative: false,
            pass: (value - target).abs() <= tolerance,
        }
    }

    fn relative(name: &'static str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            target,
            tolerance,
            relative: true,
            pass: (value - target).abs() <= tolerance * target.abs(),
        }
    }
}

/// Aggregate tolerances of the simulation checks.
pub mod tolerance {
    pub const RISK: f64 = 0.01;
    pub const OVERLAP: f64 = 0.03;
    pub const SUPERVISED_LABELED: f64 = 0.015;
    pub const LLR_MEAN_REL: f64 = 0.05;
    pub const LLR_VAR_REL: f64 = 0.10;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: &'static str,
    pub params: ModelParams,
    pub sizes: Sizes,
    pub seeds: Vec<u64>,
    pub amp: AmpConfig,
    pub quadrature: String,
    pub analytic: Analytic,
    pub succeeded: usize,
    pub failures: Vec<SeedFailure>,
    pub aggregates: BTreeMap<&'static str, Aggregate>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl Summary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub csv: String,
    pub summary: Summary,
}

fn quadrature_label(cfg: &RunConfig) -> String {
    match cfg.quadrature_order {
        Some(order) => format!("gauss-hermite-{order}"),
        None => format!(
            "trapezoid-{}",
            bayesrisk_core::special_math::TRAPEZOID_POINTS
        ),
    }
}

fn analytic(cfg: &RunConfig, params: &ModelParams) -> Result<Analytic> {
    let ch = cfg.channels()?;
    let unsupervised = unsupervised_risk(&ch, params.alpha, params.sigma2)?;
    let (q_star, semi_supervised, supervised_labeled) = if params.eta > 0.0 {
        let report = RiskReport::compute(&ch, params)?;
        (report.q_star, report.semi_supervised, Some(report.supervised_labeled))
    } else {
        (unlabeled_minimizer(&ch, params.alpha, params.sigma2)?, unsupervised, None)
    };
    Ok(Analytic {
        q_star,
        semi_supervised,
        oracle: oracle_risk(params.sigma2)?,
        supervised_full: supervised_full_risk(params.alpha, params.sigma2)?,
        supervised_labeled,
        unsupervised,
        llr_mean: 2.0 * q_star / params.sigma2,
        llr_variance: 4.0 * q_star / params.sigma2,
    })
}

/// Without labels there is no sign reference; risks are read sign-fixed.
fn amp_risk(r: &ReplicateReport, eta: f64) -> bayesrisk_core::simulator::EmpiricalRisk {
    if eta > 0.0 {
        r.amp.risk
    } else {
        r.amp.risk.sign_fixed()
    }
}

fn seed_row(r: &ReplicateReport, eta: f64) -> String {
    let risk = amp_risk(r, eta);
    let mut fields = vec![r.seed.to_string(), "ok".to_string()];
    fields.extend(
        [
            risk.risk,
            risk.se,
            r.amp.overlap_u,
            r.amp.self_overlap_u,
            r.amp.overlap_v,
            r.amp.llr.mean_pos,
            r.amp.llr.mean_neg,
            r.amp.llr.variance,
            r.llr_proxy.mean_pos,
            r.llr_proxy.mean_neg,
            r.llr_proxy.variance,
            r.oracle.risk,
        ]
        .into_iter()
        .map(g12),
    );
    fields.push(r.supervised_labeled.map_or_else(String::new, |s| g12(s.risk)));
    fields.push(g12(r.supervised_full.risk));
    fields.push(r.iterations.to_string());
    fields.push(r.converged.to_string());
    line(fields)
}

fn failed_row(seed: u64) -> String {
    let mut fields = vec![seed.to_string(), "failed".to_string()];
    fields.resize(SIMULATE_COLUMNS.len(), String::new());
    line(fields)
}

/// Runs every seed at one parameter point. Seeds whose AMP run fails
/// numerically are recorded and skipped; any other error aborts.
pub fn simulate(cfg: &RunConfig) -> Result<SimulationOutput> {
    let params = cfg.params()?;
    let sizes = cfg.sizes;
    if sizes.n == 0 || sizes.d == 0 || sizes.m == 0 {
        return Err(HarnessError::usage(format!(
            "sizes must be positive, got n = {}, d = {}, m = {}",
            sizes.n, sizes.d, sizes.m
        )));
    }
    let target = analytic(cfg, &params)?;
    let amp = AmpConfig {
        init_perturbation: if params.eta > 0.0 { 0.0 } else { 1e-3 },
        ..cfg.amp
    };
    let outcomes: Vec<_> = cfg.pool()?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| (seed, run_replicate(&params, sizes, seed, &amp, target.q_star)))
            .collect()
    });

    let mut csv = line(SIMULATE_COLUMNS);
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                csv.push_str(&seed_row(&r, params.eta));
                reports.push(r);
            }
            Err(e) if e.is_numerical() => {
                log::warn!("seed {seed}: {e}");
                csv.push_str(&failed_row(seed));
                failures.push(SeedFailure {
                    seed,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    if !reports.is_empty() {
        let mut add = |name: &'static str, f: &dyn Fn(&ReplicateReport) -> f64| {
            let values: Vec<f64> = reports.iter().map(f).collect();
            aggregates.insert(name, Aggregate::of(&values));
        };
        add("risk", &|r| amp_risk(r, params.eta).risk);
        add("overlap_u", &|r| r.amp.overlap_u);
        add("self_overlap_u", &|r| r.amp.self_overlap_u);
        add("overlap_v", &|r| r.amp.overlap_v);
        add("llr_mean_pos", &|r| r.amp.llr.mean_pos);
        add("llr_mean_neg", &|r| r.amp.llr.mean_neg);
        add("llr_var", &|r| r.amp.llr.variance);
        add("proxy_mean_pos", &|r| r.llr_proxy.mean_pos);
        add("proxy_mean_neg", &|r| r.llr_proxy.mean_neg);
        add("proxy_var", &|r| r.llr_proxy.variance);
        add("oracle_risk", &|r| r.oracle.risk);
        add("supervised_full_risk", &|r| r.supervised_full.risk);
        add("iterations", &|r| r.iterations as f64);
        if params.eta > 0.0 {
            add("supervised_labeled_risk", &|r| {
                r.supervised_labeled.map_or(f64::NAN, |s| s.risk)
            });
        }

        let mean = |name: &str| aggregates[name].mean;
        checks.push(Check::absolute("risk", mean("risk"), target.semi_supervised, tolerance::RISK));
        checks.push(Check::absolute("overlap_u", mean("overlap_u"), target.q_star, tolerance::OVERLAP));
        if let Some(labeled) = target.supervised_labeled {
            checks.push(Check::absolute(
                "supervised_labeled_risk",
                mean("supervised_labeled_risk"),
                labeled,
                tolerance::SUPERVISED_LABELED,
            ));
        }
        if target.q_star > 0.0 {
            checks.push(Check::relative(
                "proxy_mean_pos",
                mean("proxy_mean_pos"),
                target.llr_mean,
                tolerance::LLR_MEAN_REL,
            ));
            checks.push(Check::relative(
                "proxy_mean_neg",
                mean("proxy_mean_neg"),
                -target.llr_mean,
                tolerance::LLR_MEAN_REL,
            ));
            checks.push(Check::relative(
                "proxy_var",
                mean("proxy_var"),
                target.llr_variance,
                tolerance::LLR_VAR_REL,
            ));
        }
    }
    let all_pass = !reports.is_empty() && checks.iter().all(|c| c.pass);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        params,
        sizes,
        seeds: cfg.seeds.clone(),
        amp,
        quadrature: quadrature_label(cfg),
        analytic: target,
        succeeded: reports.len(),
        failures,
        aggregates,
        checks,
        all_pass,
    };
    Ok(SimulationOutput { csv, summary })
}

/// Where the JSON summary of `simulate` goes: `--summary`, else next to
/// `--out` with a `.json` extension, else standard error.
pub fn summary_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.summary
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| p.with_extension("json")))
}

/// Writes `text` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}
