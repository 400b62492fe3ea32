use proptest::prelude::*;
use qkdstat_core::bernoulli::*;
use qkdstat_core::{Direction, PrecisionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(n: f64, x: f64) -> BernoulliSample {
    BernoulliSample::new(n, x).unwrap()
}

#[test]
fn relaxed_divergence_is_dominated() {
    let m = 1000;
    for i in 0..=m {
        for j in 1..m {
            let (z, p) = (i as f64 / m as f64, j as f64 / m as f64);
            let r = divergence(z, p, DivergenceMode::Relaxed).unwrap();
            let e = divergence(z, p, DivergenceMode::Exact).unwrap();
            assert!(r <= e * (1.0 + 1e-12) + 1e-300, "z={z} p={p}: {r} > {e}");
        }
    }
    // Offset grid: puts z and p within 1e-5 of each other near ½.
    for i in 0..m {
        for j in 0..m {
            let (z, p) = (i as f64 / (m - 1) as f64, (j as f64 + 0.5) / m as f64);
            let r = divergence(z, p, DivergenceMode::Relaxed).unwrap();
            let e = divergence(z, p, DivergenceMode::Exact).unwrap();
            assert!(r <= e * (1.0 + 1e-12) + 1e-300, "z={z} p={p}: {r} > {e}");
        }
    }
}

#[test]
fn divergence_edge_values() {
    assert_eq!(divergence(0.3, 0.3, DivergenceMode::Exact).unwrap(), 0.0);
    assert_eq!(divergence(0.3, 0.0, DivergenceMode::Exact).unwrap(), f64::INFINITY);
    let d = divergence(0.0, 0.5, DivergenceMode::Exact).unwrap();
    assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
    assert!(divergence(1.2, 0.5, DivergenceMode::Relaxed).is_err());
}

#[test]
fn forward_z_inverts_gamma_minus() {
    for &n in &[50.0, 1e3, 1e6] {
        for &eps in &[1e-3, 1e-10] {
            let t = RelaxedChernoffTerms::new(n, eps).unwrap();
            for i in 1..50 {
                let p = i as f64 / 100.0;
                let Ok(z) = forward_z(n, p, eps) else { continue };
                assert!(z >= p);
                // n·D(z, p) = ln(1/ε) on the forward solution.
                let d = divergence(z, p, DivergenceMode::Relaxed).unwrap();
                assert!(
                    (n * d - (1.0 / eps).ln()).abs() <= 1e-8 * (1.0 / eps).ln(),
                    "n={n} p={p}"
                );
                let (lo, hi) = t.lower_interval();
                if z >= lo && z <= hi {
                    assert!((t.gamma_minus(z) - p).abs() <= 1e-10, "n={n} eps={eps} p={p}");
                }
            }
        }
    }
}

#[test]
fn gamma_sentinels_and_clamp() {
    let s = sample(10.0, 0.0);
    assert_eq!(gamma_bound(Direction::Lower, s, 1e-9, false).unwrap(), -1e-9);
    assert_eq!(gamma_bound(Direction::Lower, s, 1e-9, true).unwrap(), 0.0);
    let s = sample(10.0, 10.0);
    assert_eq!(gamma_bound(Direction::Upper, s, 1e-9, false).unwrap(), 1.0 + 1e-9);
    assert_eq!(gamma_bound(Direction::Upper, s, 1e-9, true).unwrap(), 1.0);
}

#[test]
fn gamma_brackets_estimate() {
    for x in 0..=1000 {
        let s = sample(1000.0, x as f64);
        let lo = gamma_bound(Direction::Lower, s, 1e-6, true).unwrap();
        let hi = gamma_bound(Direction::Upper, s, 1e-6, true).unwrap();
        assert!(lo <= s.p_hat() && s.p_hat() <= hi);
    }
}

#[test]
fn mult_chernoff_at_zero_count() {
    let prec = PrecisionConfig::default();
    let eps: f64 = 1e-10;
    let up = bernoulli_interval(
        BernoulliBoundKind::MultChernoff,
        Direction::Upper,
        eps,
        0.0,
        100.0,
        &prec,
    )
    .unwrap();
    let lo = bernoulli_interval(
        BernoulliBoundKind::MultChernoff,
        Direction::Lower,
        eps,
        0.0,
        100.0,
        &prec,
    )
    .unwrap();
    assert!((up - (1.0 / eps).ln()).abs() < 1e-12);
    assert_eq!(lo, 0.0);
}

#[test]
fn mult_chernoff_tends_to_gaussian_width() {
    // For large counts δ± ≈ √(2x ln(1/ε)).
    let prec = PrecisionConfig::default();
    let (x, eps) = (1e8f64, 1e-9f64);
    let t = MultChernoffTerms::new(x, eps, &prec).unwrap();
    let g = (2.0 * x * (1.0f64 / eps).ln()).sqrt();
    assert!((t.delta_plus / g - 1.0).abs() < 1e-3);
    assert!((t.delta_minus / g - 1.0).abs() < 1e-3);
    assert!(t.delta_plus > t.delta_minus);
}

#[test]
fn hoeffding_closed_form() {
    let prec = PrecisionConfig::default();
    let v = bernoulli_interval(
        BernoulliBoundKind::Hoeffding,
        Direction::Upper,
        0.01,
        30.0,
        200.0,
        &prec,
    )
    .unwrap();
    assert!((v - (30.0 + (100.0 * (100.0f64).ln()).sqrt())).abs() < 1e-12);
    let v = bernoulli_interval(BernoulliBoundKind::Hoeffding, Direction::Lower, 1.0, 30.0, 200.0, &prec).unwrap();
    assert_eq!(v, 30.0);
}

#[test]
fn clopper_pearson_closed_forms() {
    // Zero successes: ℱ⁺ = 1 − ε^{1/n}; all successes: ℱ⁻ = ε^{1/n}.
    let prec = PrecisionConfig::default();
    for &n in &[5.0f64, 40.0, 1000.0] {
        for &eps in &[1e-2f64, 1e-9] {
            let up = cp_binomial(Direction::Upper, sample(n, 0.0), eps, &prec).unwrap();
            assert!((up - (1.0 - eps.powf(1.0 / n))).abs() <= 1e-12, "n={n} eps={eps}");
            let lo = cp_binomial(Direction::Lower, sample(n, n), eps, &prec).unwrap();
            assert!((lo - eps.powf(1.0 / n)).abs() <= 1e-12, "n={n} eps={eps}");
            assert_eq!(cp_binomial(Direction::Lower, sample(n, 0.0), eps, &prec).unwrap(), 0.0);
        }
    }
    assert!(cp_binomial(Direction::Upper, sample(10.0, 2.5), 1e-3, &prec).is_err());
    assert!(cp_binomial(Direction::Upper, sample(10.0, 2.0), 0.3, &prec).is_err());
}

#[test]
fn clopper_pearson_is_tightest() {
    // On integer samples the exact interval sits inside the relaxed-Chernoff one.
    let prec = PrecisionConfig::default();
    for &n in &[20.0, 300.0] {
        for x in 0..=(n as u64) {
            let s = sample(n, x as f64);
            let eps = 1e-6;
            let cp_hi = cp_binomial(Direction::Upper, s, eps, &prec).unwrap();
            let cp_lo = cp_binomial(Direction::Lower, s, eps, &prec).unwrap();
            let rc_hi = gamma_bound(Direction::Upper, s, eps, true).unwrap();
            let rc_lo = gamma_bound(Direction::Lower, s, eps, true).unwrap();
            assert!(cp_hi <= rc_hi + 1e-12 && cp_lo >= rc_lo - 1e-12, "n={n} x={x}");
        }
    }
}

#[test]
fn binomial_family_rounds_conservatively() {
    let prec = PrecisionConfig::default();
    let k = BernoulliBoundKind::ClopperPearsonBinomial;
    let up = bernoulli_interval(k, Direction::Upper, 1e-6, 10.2, 100.0, &prec).unwrap();
    let up_ceil = bernoulli_interval(k, Direction::Upper, 1e-6, 11.0, 100.0, &prec).unwrap();
    assert_eq!(up, up_ceil);
    let lo = bernoulli_interval(k, Direction::Lower, 1e-6, 10.8, 100.0, &prec).unwrap();
    let lo_floor = bernoulli_interval(k, Direction::Lower, 1e-6, 10.0, 100.0, &prec).unwrap();
    assert_eq!(lo, lo_floor);
}

// Draws Bin(n, p) 1e5 times and checks every family's one-sided bounds.
#[test]
fn monte_carlo_coverage() {
    let prec = PrecisionConfig::default();
    let (n, p, eps, draws) = (200u32, 0.1f64, 0.05f64, 100_000u32);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let counts: Vec<u32> = (0..draws)
        .map(|_| (0..n).filter(|_| rng.gen::<f64>() < p).count() as u32)
        .collect();
    let limit = eps + 3.0 * (eps / draws as f64).sqrt();
    for kind in BernoulliBoundKind::ALL {
        let mut table = vec![(0.0, 0.0); n as usize + 1];
        for (x, slot) in table.iter_mut().enumerate() {
            let up = bernoulli_interval(kind, Direction::Upper, eps, x as f64, n as f64, &prec).unwrap();
            let lo = bernoulli_interval(kind, Direction::Lower, eps, x as f64, n as f64, &prec).unwrap();
            *slot = (lo, up);
        }
        let mean = p * n as f64;
        let miss_up = counts.iter().filter(|&&x| table[x as usize].1 < mean).count() as f64 / draws as f64;
        let miss_lo = counts.iter().filter(|&&x| table[x as usize].0 > mean).count() as f64 / draws as f64;
        assert!(miss_up <= limit, "{} upper: {miss_up}", kind.name());
        assert!(miss_lo <= limit, "{} lower: {miss_lo}", kind.name());
    }
}

proptest! {
    #[test]
    fn intervals_bracket_count(total in 1u32..5000, frac in 0.0f64..=1.0, le in 1.0f64..20.0) {
        let prec = PrecisionConfig::default();
        let eps = 10f64.powf(-le).min(0.25);
        let count = (frac * total as f64).floor();
        for kind in BernoulliBoundKind::ALL {
            let up = bernoulli_interval(kind, Direction::Upper, eps, count, total as f64, &prec).unwrap();
            let lo = bernoulli_interval(kind, Direction::Lower, eps, count, total as f64, &prec).unwrap();
            prop_assert!(lo <= count + 1e-9 && count <= up + 1e-9, "{}", kind.name());
        }
    }

    #[test]
    fn wider_at_smaller_eps(total in 10u32..2000, frac in 0.0f64..=1.0) {
        let prec = PrecisionConfig::default();
        let count = (frac * total as f64).floor();
        for kind in BernoulliBoundKind::ALL {
            let a = bernoulli_interval(kind, Direction::Upper, 1e-3, count, total as f64, &prec).unwrap();
            let b = bernoulli_interval(kind, Direction::Upper, 1e-9, count, total as f64, &prec).unwrap();
            // Relaxed-Chernoff sentinels encode ε, so compare clamped values.
            let t = total as f64;
            prop_assert!(b.min(t) >= a.min(t) - 1e-9, "{}", kind.name());
        }
    }
}
