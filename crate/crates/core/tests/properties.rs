use bayesrisk_core::potential::{potential_f_prime, solve_q_star, unlabeled_minimizer};
use bayesrisk_core::risk::{bayes_risk_ssl, unsupervised_risk, RiskReport};
use bayesrisk_core::special_math::{log_cosh, normal_cdf};
use bayesrisk_core::{ModelParams, QuadratureRule, ScalarChannels};
use proptest::prelude::*;

fn p(alpha: f64, sigma2: f64, eta: f64) -> ModelParams {
    ModelParams::new(alpha, sigma2, eta).unwrap()
}

fn double_factorial_moment(k: usize) -> f64 {
    // E Z^k: 0 for odd k, (k - 1)!! for even k
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|j| j as f64).product()
}

fn sign_changes(values: &[f64]) -> usize {
    values
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gauss_hermite_is_exact_on_polynomials(
        order in 1usize..=40,
        coeffs in prop::collection::vec(-1.0f64..1.0, 80),
    ) {
        let rule = QuadratureRule::gauss_hermite(order).unwrap();
        let degree = 2 * order - 1;
        let c = &coeffs[..=degree];
        let poly = |z: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * z + ck);
        let exact: f64 = c.iter().enumerate().map(|(k, &ck)| ck * double_factorial_moment(k)).sum();
        let scale: f64 = c.iter().enumerate().map(|(k, &ck)| ck.abs() * double_factorial_moment(k + k % 2)).sum();
        let got = rule.expect(poly).unwrap();
        prop_assert!((got - exact).abs() <= 1e-9 * scale.max(1.0), "order {order}: {got} vs {exact}");
    }

    #[test]
    fn normal_cdf_is_symmetric(x in -40.0f64..40.0) {
        prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn log_cosh_is_even_and_below_abs(x in -1e6f64..1e6) {
        prop_assert_eq!(log_cosh(x), log_cosh(-x));
        prop_assert!(log_cosh(x) <= x.abs());
    }

    #[test]
    fn potential_has_a_unique_critical_point(
        alpha in 0.1f64..10.0,
        sigma2 in 0.05f64..5.0,
        eta in 1e-6f64..=1.0,
    ) {
        let ch = ScalarChannels::default();
        let params = p(alpha, sigma2, eta);
        let last = 1.0 - 1e-6;
        let values: Vec<f64> = (0..10_000)
            .map(|k| potential_f_prime(&ch, last * k as f64 / 9999.0, &params).unwrap())
            .collect();
        prop_assert_eq!(sign_changes(&values), 1);
        let report = solve_q_star(&ch, &params).unwrap();
        prop_assert!(report.method_gap <= 1e-8, "gap {}", report.method_gap);
        let q_v = report.overlaps.q_v;
        let closure = alpha * q_v / (sigma2 + alpha * q_v);
        prop_assert!((report.overlaps.q_u - closure).abs() <= 1e-10);
    }

    #[test]
    fn solution_is_monotone_along_ladders(
        alpha in 0.2f64..5.0,
        sigma2 in 0.1f64..3.0,
        eta in 0.05f64..0.9,
    ) {
        let ch = ScalarChannels::default();
        let q = |a: f64, s: f64, e: f64| solve_q_star(&ch, &p(a, s, e)).unwrap().q_star;
        let ladder = [1.0, 1.1, 1.25, 1.5, 2.0];
        let by_eta: Vec<f64> = ladder.iter().map(|&k| q(alpha, sigma2, (eta * k).min(1.0))).collect();
        let by_alpha: Vec<f64> = ladder.iter().map(|&k| q(alpha * k, sigma2, eta)).collect();
        let by_sigma2: Vec<f64> = ladder.iter().map(|&k| q(alpha, sigma2 * k, eta)).collect();
        for w in by_eta.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10);
        }
        for w in by_alpha.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10);
        }
        for w in by_sigma2.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fully_labeled_boundary(alpha in 0.1f64..10.0, sigma2 in 0.05f64..5.0) {
        let q = solve_q_star(&ScalarChannels::default(), &p(alpha, sigma2, 1.0)).unwrap().q_star;
        prop_assert!((q - alpha / (alpha + sigma2)).abs() <= 1e-10);
    }

    #[test]
    fn risk_report_ordering(alpha in 0.1f64..10.0, sigma2 in 0.05f64..5.0, eta in 1e-4f64..=1.0) {
        let r = RiskReport::compute(&ScalarChannels::default(), &p(alpha, sigma2, eta)).unwrap();
        prop_assert!(r.ordering_violations(1e-10).is_empty(), "{:?}", r.ordering_violations(1e-10));
        for risk in r.risks() {
            prop_assert!((0.0..=0.5).contains(&risk));
        }
    }
}

/// (alpha, sigma^2) with alpha / sigma^4 at least `ratio_lo` or at most `ratio_hi`.
fn away_from_threshold(ratio_lo: f64, ratio_hi: f64) -> impl Strategy<Value = (f64, f64)> {
    (0.1f64..10.0, 0.05f64..5.0).prop_filter("near the spectral threshold", move |&(a, s)| {
        let r = a / (s * s);
        r >= ratio_lo || r <= ratio_hi
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn vanishing_labels_recover_the_unsupervised_risk((alpha, sigma2) in away_from_threshold(1.5, 0.5)) {
        let ch = ScalarChannels::default();
        let ssl = bayes_risk_ssl(&ch, &p(alpha, sigma2, 1e-8)).unwrap();
        let unsup = unsupervised_risk(&ch, alpha, sigma2).unwrap();
        prop_assert!((ssl - unsup).abs() <= 1e-4, "{ssl} vs {unsup}");
    }

    #[test]
    fn continuity_at_zero_labels_above_threshold((alpha, sigma2) in away_from_threshold(1.5, 0.0)) {
        let ch = ScalarChannels::default();
        let ssl = bayes_risk_ssl(&ch, &p(alpha, sigma2, 1e-6)).unwrap();
        let unsup = unsupervised_risk(&ch, alpha, sigma2).unwrap();
        prop_assert!((ssl - unsup).abs() <= 1e-3, "{ssl} vs {unsup}");
    }
}

#[test]
fn spectral_threshold_at_unit_ratio() {
    let ch = ScalarChannels::default();
    assert_eq!(unlabeled_minimizer(&ch, 1.0, 1.001).unwrap(), 0.0);
    assert!(unlabeled_minimizer(&ch, 1.0, 0.999).unwrap() > 0.0);
    for sigma2 in [1.01, 1.2, 2.0, 5.0] {
        assert_eq!(unlabeled_minimizer(&ch, 1.0, sigma2).unwrap(), 0.0);
    }
    for sigma2 in [0.1, 0.5, 0.9, 0.99] {
        assert!(unlabeled_minimizer(&ch, 1.0, sigma2).unwrap() > 0.0);
    }
}
