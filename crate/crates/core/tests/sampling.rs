use qkdstat_core::numerics::hg_log_pmf;
use qkdstat_core::sampling::*;
use qkdstat_core::PrecisionConfig;

type Kind = SamplingBoundKind;

fn exact_binomials(max: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; max + 1]; max + 1];
    for n in 0..=max {
        c[n][0] = 1;
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + if k < n { c[n - 1][k] } else { 0 };
        }
    }
    c
}

#[test]
fn cp_plus_matches_linear_scan() {
    let prec = PrecisionConfig::default();
    let c = exact_binomials(70);
    for big_n in [1usize, 7, 30, 70] {
        for n in 1..=big_n {
            for x in 0..=n {
                for eps in [1e-3, 0.07] {
                    let k0 = (x * big_n).div_ceil(n);
                    let cmf = |k: usize| -> f64 {
                        let lo = n.saturating_sub(big_n - k);
                        let num: u128 = (lo..=x.min(k)).map(|i| c[k][i] * c[big_n - k][n - i]).sum();
                        num as f64 / c[big_n][n] as f64
                    };
                    let want = (k0..=big_n).find(|&k| cmf(k) <= eps).unwrap_or(big_n + 1);
                    let got = cp_plus_hg_count(big_n as u64, n as u64, eps, x as u64, &prec).unwrap();
                    assert_eq!(got, want as u64, "N={big_n} n={n} x={x} eps={eps}");
                }
            }
        }
    }
}

#[test]
fn cp_plus_full_sample_steps_past_count() {
    // n = N reveals K: the CMF is 1 at K = x and 0 above, so the smallest
    // K passing the strict tail test is x + 1.
    let prec = PrecisionConfig::default();
    for x in 0..=50u64 {
        assert_eq!(cp_plus_hg_count(50, 50, 1e-6, x, &prec).unwrap(), x + 1);
    }
}

#[test]
fn cp_plus_below_relaxed_grid_ceiling() {
    let prec = PrecisionConfig::default();
    for big_n in [10u64, 53, 200, 500] {
        let step = if big_n > 100 { 7 } else { 1 };
        for n in (1..=big_n).step_by(step) {
            for x in 0..=n {
                let eps = 1e-4;
                let p = x as f64 / n as f64;
                let cp = cp_plus_hg_count(big_n, n, eps, x, &prec).unwrap();
                let g = confidence_upper(Kind::RelaxedChernoff, big_n, n, eps, p, &prec).unwrap();
                let ceil = (big_n as f64 * g - 1e-9).ceil() as u64;
                assert!(cp <= ceil, "N={big_n} n={n} x={x}: {cp} > {ceil}");
            }
        }
    }
}

// Pr[q̂ ≥ q^th(p̂)] for the true population count K, by exact summation of
// the hypergeometric pmf over all test outcomes.
fn conditional_failure(kind: Kind, big_n: u64, n: u64, eps: f64) -> f64 {
    let prec = PrecisionConfig::default();
    let q: Vec<f64> = (0..=n)
        .map(|x| threshold(kind, big_n, n, eps, x as f64 / n as f64, &prec).unwrap_or(f64::INFINITY))
        .collect();
    let rest = (big_n - n) as f64;
    let mut worst = 0.0f64;
    for k in 0..=big_n {
        let mut fail = 0.0;
        let lo = n.saturating_sub(big_n - k);
        for x in lo..=n.min(k) {
            if (k - x) as f64 / rest >= q[x as usize] {
                fail += hg_log_pmf(big_n, k, n, x as i64).unwrap().exp();
            }
        }
        worst = worst.max(fail);
    }
    worst
}

#[test]
fn conditional_failure_is_certified() {
    for (big_n, n) in [(200u64, 50u64), (1000, 200)] {
        for eps in [1e-3, 1e-6] {
            for kind in Kind::ALL {
                let f = conditional_failure(kind, big_n, n, eps);
                assert!(f <= eps, "{} N={big_n} n={n} eps={eps}: {f:e}", kind.name());
            }
        }
    }
}

#[test]
fn threshold_ordering_at_1e5() {
    let prec = PrecisionConfig::default();
    for i in 1..=8 {
        let p = 0.005 * i as f64;
        let t = |k| threshold(k, 100_000, 10_000, 1e-9, p, &prec).unwrap();
        let (cp, rc, ek, se) = (
            t(Kind::ClopperPearsonHG),
            t(Kind::RelaxedChernoff),
            t(Kind::EkertCombined),
            t(Kind::Serfling),
        );
        assert!(
            cp <= rc && rc <= ek && ek <= se && cp < se,
            "p={p}: {cp} {rc} {ek} {se}"
        );
    }
}

#[test]
fn chernoff_beats_serfling_at_small_fractions() {
    let prec = PrecisionConfig::default();
    for n in [500u64, 1000, 5000] {
        let rc = threshold(Kind::RelaxedChernoff, 1_000_000, n, 1e-9, 0.03, &prec).unwrap();
        let se = threshold(Kind::Serfling, 1_000_000, n, 1e-9, 0.03, &prec).unwrap();
        assert!(rc < se, "n={n}");
    }
}

#[test]
fn serfling_formula() {
    let (bn, n, eps, p) = (1e5, 1e4, 1e-9, 0.04);
    let want = p + (bn * (n + 1.0) * (1.0f64 / eps).ln() / (2.0 * (bn - n) * n * n)).sqrt();
    let prec = PrecisionConfig::default();
    assert_eq!(threshold(Kind::Serfling, 100_000, 10_000, eps, p, &prec).unwrap(), want);
}

#[test]
fn hush_scovel_inverse() {
    let t = HushScovelTerms::new(1e5, 1e4, 1e-9).unwrap();
    for i in 0..=100 {
        let p = t.p_plus + (1.0 - t.p_plus) * i as f64 / 100.0;
        let x = t.z(p);
        if x >= 0.0 {
            assert!((t.z_inv(x) - p).abs() <= 1e-12, "p={p}");
        }
    }
}

#[test]
fn ekert_min_not_above_max() {
    for i in 1..=8 {
        let p = 0.005 * i as f64;
        let lo = ekert_threshold(100_000, 10_000, 1e-9, p, EkertDirection::Min).unwrap();
        let hi = ekert_threshold(100_000, 10_000, 1e-9, p, EkertDirection::Max).unwrap();
        assert!(lo <= hi && lo > p);
    }
}

#[test]
fn ekert_infeasible_when_budget_too_small() {
    assert!(ekert_threshold(100, 10, 1e-30, 0.01, EkertDirection::Min).is_err());
}

#[test]
fn slope_holds_at_reference_settings() {
    let prec = PrecisionConfig::default();
    for kind in Kind::ALL {
        assert!(
            slope_check(kind, 100_000, 10_000, 4e-16, 0.0455, &prec),
            "{}",
            kind.name()
        );
    }
}

#[test]
fn input_validation() {
    let prec = PrecisionConfig::default();
    assert!(threshold(Kind::RelaxedChernoff, 100, 100, 1e-3, 0.01, &prec).is_err());
    assert!(threshold(Kind::RelaxedChernoff, 100, 10, 0.0, 0.01, &prec).is_err());
    assert!(threshold(Kind::Serfling, 100, 10, 1.0, 0.01, &prec).is_ok());
    assert!(cp_plus_hg(100, 10, 1e-3, 11, &prec).is_err());
    assert!(confidence_upper(Kind::ClopperPearsonHG, 100, 10, 1e-3, 0.15, &prec).is_err());
    assert!(confidence_upper(Kind::Serfling, 100, 10, 1e-3, 0.1, &prec).is_err());
}

#[test]
fn hypergeometric_sampler_mean_and_determinism() {
    let (big_n, k, n) = (1000u64, 300u64, 100u64);
    let draws = 20_000u64;
    let sum: u64 = (0..draws).map(|s| hg_sample_stream(11, s, big_n, k, n).unwrap()).sum();
    let mean = sum as f64 / draws as f64;
    // sd of the mean ≈ √(Var/draws) ≈ 0.03
    assert!((mean - 30.0).abs() < 0.15, "mean {mean}");
    assert_eq!(hg_sample(5, big_n, k, n).unwrap(), hg_sample(5, big_n, k, n).unwrap());
    assert_eq!(hg_sample(5, 10, 10, 4).unwrap(), 4);
    assert_eq!(hg_sample(5, 10, 0, 4).unwrap(), 0);
}
