use qkdstat_core::bernoulli::BernoulliBoundKind as B;
use qkdstat_core::numerics::binary_entropy;
use qkdstat_core::protocols::*;
use qkdstat_core::sampling::{threshold, SamplingBoundKind as S};
use qkdstat_core::Error;

#[test]
fn secrecy_composition() {
    assert_eq!(BBM92Inputs::reference(10_000, 1000, S::RelaxedChernoff).eps_sec(), 5e-8);
    assert_eq!(
        DecoyInputs::reference(10_000, S::RelaxedChernoff, B::RelaxedChernoff).eps_sec(),
        7e-8
    );
}

#[test]
fn bbm92_matches_closed_form() {
    let inp = BBM92Inputs::reference(100_000, 10_000, S::Serfling);
    let r = key_length_bbm92(&inp).unwrap();
    let q = threshold(S::Serfling, 100_000, 10_000, 4e-16, 0.0455, &inp.precision).unwrap();
    let keep = 90_000.0;
    let raw = keep * (1.0 - binary_entropy(q).unwrap())
        - 1.19 * keep * binary_entropy(0.0455).unwrap()
        - (1.0 / (2.0 * 1e-8 * 1e-16f64)).log2();
    assert_eq!(r.l, raw.floor() as u64);
    assert_eq!(r.rate, r.l as f64 / 100_000.0);
    assert_eq!(r.q_or_phi_threshold, q);
    assert!(r.feasible);
}

#[test]
fn bbm92_3100_block_is_infeasible_for_ekert() {
    for n in [100, 300, 600, 1000, 1500] {
        let r = key_length_bbm92(&BBM92Inputs::reference(3100, n, S::EkertCombined)).unwrap();
        assert_eq!(r.l, 0);
        assert!(!r.feasible);
    }
}

#[test]
fn bbm92_validation() {
    let mut inp = BBM92Inputs::reference(1000, 1000, S::RelaxedChernoff);
    assert!(matches!(key_length_bbm92(&inp), Err(Error::Config { .. })));
    inp.n = 100;
    inp.eps_pe = 0.0;
    assert!(key_length_bbm92(&inp).is_err());
    inp.eps_pe = 4e-16;
    inp.p_th = 0.6;
    assert!(key_length_bbm92(&inp).is_err());
}

#[test]
fn bbm92_key_grows_with_block() {
    let mut prev = 0;
    for big_n in [5_000u64, 10_000, 50_000, 200_000] {
        let r = key_length_bbm92(&BBM92Inputs::reference(big_n, big_n / 5, S::RelaxedChernoff)).unwrap();
        assert!(r.l >= prev);
        prev = r.l;
    }
    assert!(prev > 0);
}

#[test]
fn channel_expectations_follow_poisson_model() {
    let model = ChannelModel::reference();
    let inp = DecoyInputs::reference(1_000_000, S::RelaxedChernoff, B::RelaxedChernoff);
    let c = channel_expectations(&model, &inp).unwrap();
    let total_z: f64 = c.n_z.iter().sum();
    let total_x: f64 = c.n_x.iter().sum();
    assert!((total_z - inp.n_z as f64).abs() < 1e-6);
    assert!((total_x - inp.n_x as f64).abs() < 1e-6);
    let eta = 1e-3;
    assert!((model.eta() - eta).abs() < 1e-15);
    // Per-intensity detection ratio against the Poisson yield 1 − (1−2p_d)e^{−ηk}.
    let d = |k: f64| 1.0 - (1.0 - 2.0 * 6e-7) * (-eta * k).exp();
    let ratio = c.n_z[0] / c.n_z[1];
    let want = inp.p_mu * d(0.5) / (inp.p_nu * d(0.1));
    assert!((ratio / want - 1.0).abs() < 1e-12);
}

#[test]
fn n_split_rounds_to_nearest() {
    let mut inp = DecoyInputs::reference(1001, S::RelaxedChernoff, B::RelaxedChernoff);
    inp.q_x = 0.5;
    inp.set_block(1001);
    assert_eq!(inp.n_z + inp.n_x, 1001);
    assert!(inp.n_z.abs_diff(inp.n_x) <= 1);
    assert_eq!(inp.block(), 1001);
}

// With ε = 1 the Hoeffding deviations vanish and the decoy bounds reduce to
// their asymptotic form, which must bracket the true single-photon counts.
#[test]
fn asymptotic_decoy_bounds_bracket_single_photon_counts() {
    let model = ChannelModel::reference();
    let mut inp = DecoyInputs::reference(10_000_000, S::RelaxedChernoff, B::Hoeffding);
    inp.intensities = Intensities {
        mu: 0.5,
        nu: 0.1,
        omega: 1e-4,
    };
    inp.p_mu = 0.6;
    inp.p_nu = 0.3;
    inp.set_block(10_000_000);
    let c = channel_expectations(&model, &inp).unwrap();
    let b = decoy_single_photon_bounds(&c, &inp, 1.0).unwrap();
    let eta = model.eta();
    let total: f64 = inp
        .probabilities()
        .iter()
        .zip(inp.intensities.as_array())
        .map(|(p, k)| p * model.detection(k))
        .sum();
    let y1 = 1.0 - (1.0 - 2.0 * model.p_d) * (1.0 - eta);
    let e1 = model.p_d + model.e_mis * eta;
    let n1z = inp.tau1() * y1 * inp.n_z as f64 / total;
    let n1x = inp.tau1() * y1 * inp.n_x as f64 / total;
    let m1x = inp.tau1() * e1 * inp.n_x as f64 / total;
    assert!(b.n1z_l <= n1z && n1z <= b.n1z_u, "{} {} {}", b.n1z_l, n1z, b.n1z_u);
    assert!(b.n1x_l <= n1x && n1x <= b.n1x_u);
    assert!(b.m1x_u >= m1x);
    // ...and they are reasonably tight for a weak decoy.
    assert!(b.n1z_l > 0.8 * n1z && b.n1z_u < 1.2 * n1z);
}

#[test]
fn finite_statistics_widen_the_bounds() {
    let model = ChannelModel::reference();
    let inp = DecoyInputs::reference(100_000, S::RelaxedChernoff, B::Hoeffding);
    let c = channel_expectations(&model, &inp).unwrap();
    let a = decoy_single_photon_bounds(&c, &inp, 1.0).unwrap();
    let f = decoy_single_photon_bounds(&c, &inp, 1e-10).unwrap();
    assert!(f.n1z_l <= a.n1z_l && f.n1z_u >= a.n1z_u && f.m1x_u >= a.m1x_u);
}

#[test]
fn pe_test_passes_at_expectations_and_fails_on_excess_errors() {
    let model = ChannelModel::reference();
    for (s, b) in [
        (S::RelaxedChernoff, B::RelaxedChernoff),
        (S::ClopperPearsonHG, B::ClopperPearsonBinomial),
        (S::EkertCombined, B::MultChernoff),
    ] {
        let mut inp = DecoyInputs::reference(1_000_000, s, b);
        inp.b_grid = 10;
        let th = pe_thresholds(&inp, &model).unwrap();
        let c = channel_expectations(&model, &inp).unwrap();
        let ok = key_length_decoy(&inp, &c, &th).unwrap();
        assert!(ok.feasible && ok.l > 0, "{s:?}");
        let mut bad = c;
        for m in bad.m_x.iter_mut() {
            *m *= 3.0;
        }
        let r = key_length_decoy(&inp, &bad, &th).unwrap();
        assert!(!r.feasible && r.l == 0, "{s:?}");
        assert_eq!(evaluate_decoy(&inp, &model).unwrap(), ok);
    }
}

#[test]
fn decoy_epsilon_multipliers() {
    assert_eq!(eps_multiplier(S::RelaxedChernoff), 16);
    assert_eq!(eps_multiplier(S::ClopperPearsonHG), 16);
    assert_eq!(eps_multiplier(S::EkertCombined), 13);
    let inp = DecoyInputs::reference(10_000, S::EkertCombined, B::MultChernoff);
    assert_eq!(inp.eps_each(), 4e-16 / 13.0);
}

#[test]
fn decoy_validation() {
    let mut inp = DecoyInputs::reference(10_000, S::RelaxedChernoff, B::RelaxedChernoff);
    inp.intensities.nu = 0.6;
    assert!(inp.validate().is_err());
    let mut inp = DecoyInputs::reference(10_000, S::RelaxedChernoff, B::RelaxedChernoff);
    inp.p_mu = 0.75;
    inp.p_nu = 0.3;
    assert!(inp.validate().is_err());
    assert!(ChannelModel {
        loss_db: -1.0,
        p_d: 0.0,
        e_mis: 0.0
    }
    .validate()
    .is_err());
    assert!(ChannelModel::from_eta(1e-3, 6e-7, 5e-3).is_ok());
}

#[test]
fn decoy_key_grows_with_block() {
    let model = ChannelModel::reference();
    let mut prev = 0.0;
    for big_n in [100_000u64, 1_000_000, 10_000_000] {
        let r = evaluate_decoy(
            &DecoyInputs::reference(big_n, S::RelaxedChernoff, B::RelaxedChernoff),
            &model,
        )
        .unwrap();
        assert!(r.rate >= prev);
        prev = r.rate;
    }
}
