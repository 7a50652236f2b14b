//! Finite-size checks of the simulator against the analytic solver at
//! `N = D = 4000`. Heavy cases take a shared lock so that at most one
//! full-size data set is alive at a time.
//!
//! Single-seed overlaps fluctuate by about 0.015 at this size, so the
//! reference-point checks run on the average over eight seeds.

use std::sync::{Mutex, MutexGuard, OnceLock};

use bayesrisk_core::potential::solve_q_star;
use bayesrisk_core::risk::{bayes_risk_ssl, oracle_risk, supervised_full_risk, supervised_labeled_risk};
use bayesrisk_core::simulator::{
    amp_estimate, classify_new, classify_with, generate, oracle_classify, run_replicate,
    spectral_estimate, AmpConfig, ReplicateReport, Sizes,
};
use bayesrisk_core::{ModelParams, ScalarChannels};

static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn p(alpha: f64, sigma2: f64, eta: f64) -> ModelParams {
    ModelParams::new(alpha, sigma2, eta).unwrap()
}

fn sizes(nd: usize, m: usize) -> Sizes {
    Sizes { n: nd, d: nd, m }
}

const SEEDS: std::ops::RangeInclusive<u64> = 1..=8;

struct ReferencePoint {
    params: ModelParams,
    q_star: f64,
    reports: Vec<ReplicateReport>,
}

impl ReferencePoint {
    fn mean(&self, f: impl Fn(&ReplicateReport) -> f64) -> f64 {
        self.reports.iter().map(f).sum::<f64>() / self.reports.len() as f64
    }

    /// Standard error of the seed average.
    fn se(&self, f: impl Fn(&ReplicateReport) -> f64) -> f64 {
        let values: Vec<f64> = self.reports.iter().map(f).collect();
        seed_se(&values)
    }
}

fn seed_se(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn reference_point() -> &'static ReferencePoint {
    static CELL: OnceLock<ReferencePoint> = OnceLock::new();
    CELL.get_or_init(|| {
        let _guard = heavy();
        let params = p(1.0, 0.9, 0.2);
        let q_star = solve_q_star(&ScalarChannels::default(), &params).unwrap().q_star;
        let reports = SEEDS
            .map(|seed| run_replicate(&params, Sizes::DEFAULT, seed, &AmpConfig::default(), q_star).unwrap())
            .collect();
        ReferencePoint { params, q_star, reports }
    })
}

#[test]
fn amp_overlap_tracks_the_fixed_point() {
    let fp = reference_point();
    for r in &fp.reports {
        assert!(r.converged, "seed {}: AMP did not converge in {} sweeps", r.seed, r.iterations);
    }
    let overlap = fp.mean(|r| r.amp.overlap_u);
    assert!((overlap - fp.q_star).abs() <= 0.02, "overlap {overlap} vs q* {}", fp.q_star);
}

#[test]
fn self_overlap_matches_cross_overlap() {
    let fp = reference_point();
    for r in &fp.reports {
        assert!((r.amp.self_overlap_u - r.amp.overlap_u).abs() <= 0.03, "seed {}", r.seed);
    }
    let self_overlap = fp.mean(|r| r.amp.self_overlap_u);
    assert!((self_overlap - fp.q_star).abs() <= 0.03, "{self_overlap} vs {}", fp.q_star);
}

#[test]
fn label_overlap_closes_the_side_channel_equation() {
    let fp = reference_point();
    let ch = ScalarChannels::default();
    let params = fp.params;
    let predicted = (1.0 - params.eta) * ch.mmse_v(fp.q_star / params.sigma2).unwrap();
    let measured = 1.0 - fp.mean(|r| r.amp.overlap_v);
    assert!((measured - predicted).abs() <= 0.03, "{measured} vs {predicted}");
}

#[test]
fn amp_risk_matches_bayes_risk() {
    let fp = reference_point();
    let target = bayes_risk_ssl(&ScalarChannels::default(), &fp.params).unwrap();
    let risk = fp.mean(|r| r.amp.risk.risk);
    assert!((risk - target).abs() <= 0.02, "{risk} vs {target}");
}

#[test]
fn labeled_only_supervised_risk_matches_formula() {
    let fp = reference_point();
    let target = supervised_labeled_risk(&fp.params).unwrap();
    let risk = fp.mean(|r| r.supervised_labeled.unwrap().risk);
    assert!((risk - target).abs() <= 0.015, "{risk} vs {target}");
}

#[test]
fn empirical_risk_ordering() {
    let fp = reference_point();
    let oracle = |r: &ReplicateReport| r.oracle.risk;
    let amp = |r: &ReplicateReport| r.amp.risk.risk;
    let labeled = |r: &ReplicateReport| r.supervised_labeled.unwrap().risk;
    let pooled = |a: f64, b: f64| (a * a + b * b).sqrt();
    assert!(fp.mean(oracle) <= fp.mean(amp) + 2.0 * pooled(fp.se(oracle), fp.se(amp)));
    assert!(fp.mean(amp) <= fp.mean(labeled) + 2.0 * pooled(fp.se(amp), fp.se(labeled)));
}

#[test]
fn llr_proxy_matches_limit_law() {
    let fp = reference_point();
    let mean = 2.0 * fp.q_star / fp.params.sigma2;
    let var = 4.0 * fp.q_star / fp.params.sigma2;
    let mean_pos = fp.mean(|r| r.llr_proxy.mean_pos);
    let mean_neg = fp.mean(|r| r.llr_proxy.mean_neg);
    let variance = fp.mean(|r| r.llr_proxy.variance);
    assert!((mean_pos - mean).abs() <= 0.05 * mean, "{mean_pos} vs {mean}");
    assert!((mean_neg + mean).abs() <= 0.05 * mean, "{mean_neg} vs {}", -mean);
    assert!((variance - var).abs() <= 0.1 * var, "{variance} vs {var}");
    for r in &fp.reports {
        let llr = r.llr_proxy;
        assert!((llr.mean_pos + llr.mean_neg).abs() <= 3.0 * llr.symmetry_se(), "seed {}", r.seed);
    }
}

#[test]
fn fully_labeled_data() {
    let _guard = heavy();
    let params = p(1.0, 0.9, 1.0);
    let (ds, test) = generate(&params, Sizes::DEFAULT, 7).unwrap();
    let target = supervised_full_risk(1.0, 0.9).unwrap();
    let full = bayesrisk_core::simulator::supervised_estimate(&ds, true).unwrap();
    let risk = classify_with(&test, full.view()).unwrap().risk;
    assert!((risk - target).abs() <= 0.01, "supervised {risk} vs {target}");
    let state = amp_estimate(&ds, &AmpConfig::default()).unwrap();
    let amp = classify_new(&state, &ds, &test).unwrap().risk.risk;
    assert!((amp - target).abs() <= 0.015, "amp {amp} vs {target}");
}

#[test]
fn oracle_rule_risks() {
    let _guard = heavy();
    let (ds, test) = generate(&p(1.0, 1.0, 0.5), sizes(200, 100_000), 3).unwrap();
    let r = oracle_classify(&test, ds.u.view()).unwrap();
    let target = oracle_risk(1.0).unwrap();
    assert!((r.risk - target).abs() <= 3.0 * r.se, "{} vs {target}", r.risk);

    let (ds, test) = generate(&p(1.0, 1e6, 0.5), sizes(200, 100_000), 4).unwrap();
    let r = oracle_classify(&test, ds.u.view()).unwrap();
    assert!((r.risk - 0.5).abs() <= 3.0 * r.se, "{}", r.risk);

    let (ds, test) = generate(&p(1.0, 1e-8, 0.5), sizes(200, 10_000), 5).unwrap();
    assert_eq!(oracle_classify(&test, ds.u.view()).unwrap().risk, 0.0);
}

#[test]
fn spectral_baseline_across_the_threshold() {
    let _guard = heavy();
    let (ds, test) = generate(&p(1.0, 1e-6, 0.0), sizes(2000, 10_000), 8).unwrap();
    let w = spectral_estimate(&ds, 50).unwrap();
    let r = classify_with(&test, w.view()).unwrap().sign_fixed();
    assert!(r.risk <= 0.01, "{}", r.risk);
    drop((ds, test));

    let (ds, test) = generate(&p(1.0, 1.5, 0.0), sizes(4000, 10_000), 9).unwrap();
    let w = spectral_estimate(&ds, 100).unwrap();
    let r = classify_with(&test, w.view()).unwrap().sign_fixed();
    assert!((r.risk - 0.5).abs() <= 0.03, "{}", r.risk);
    drop((ds, test));

    let (ds, test) = generate(&p(1.0, 0.5, 0.0), sizes(4000, 10_000), 10).unwrap();
    let w = spectral_estimate(&ds, 100).unwrap();
    let r = classify_with(&test, w.view()).unwrap().sign_fixed();
    assert!(r.risk < 0.45, "{}", r.risk);
}

#[test]
fn risk_gap_shrinks_with_dimension() {
    let _guard = heavy();
    let params = p(1.0, 0.9, 0.2);
    let target = bayes_risk_ssl(&ScalarChannels::default(), &params).unwrap();
    // seed-averaged gap; "one standard error" is that of the difference
    // between consecutive seed averages
    let mut prev: Option<(f64, f64)> = None;
    for nd in [500, 1000, 2000, 4000] {
        let risks: Vec<f64> = (100..108)
            .map(|seed| {
                let (ds, test) = generate(&params, sizes(nd, 20_000), seed).unwrap();
                let state = amp_estimate(&ds, &AmpConfig::default()).unwrap();
                classify_new(&state, &ds, &test).unwrap().risk.risk
            })
            .collect();
        let mean = risks.iter().sum::<f64>() / risks.len() as f64;
        let se = seed_se(&risks);
        let gap = (mean - target).abs();
        if let Some((prev_gap, prev_se)) = prev {
            let tol = (se * se + prev_se * prev_se).sqrt();
            assert!(gap <= prev_gap + tol, "N = D = {nd}: gap {gap} after {prev_gap} (tol {tol})");
        }
        prev = Some((gap, se));
    }
}

#[test]
fn replicate_is_deterministic() {
    let params = p(1.0, 0.9, 0.2);
    let a = run_replicate(&params, sizes(400, 1000), 77, &AmpConfig::default(), 0.3).unwrap();
    let b = run_replicate(&params, sizes(400, 1000), 77, &AmpConfig::default(), 0.3).unwrap();
    assert_eq!(a, b);
}
