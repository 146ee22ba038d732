mod common;

use common::*;
use macroreal::protocol::log_spaced;
use macroreal::{
    delta_statistic, iwm_scan, nsit_test, run_protocol, Error, NsitVerdict, ProtocolConfig,
    ProtocolSystem, SystemFixture, Verdict,
};
use proptest::prelude::*;

const D_EFF: f64 = 1.939926739926741e2;

fn double_well_fixture() -> SystemFixture {
    let sys = shared_double_well();
    SystemFixture {
        state: sys.ground_state().clone(),
        a: sys.position().clone(),
        b: sys.position().clone(),
        hamiltonian: sys.hamiltonian().clone(),
    }
}

fn random(seed: u64) -> SystemFixture {
    let f = random_fixture(3, seed);
    SystemFixture {
        state: f.state,
        a: f.a,
        b: f.b,
        hamiltonian: f.h,
    }
}

#[test]
fn double_well_single_oscillator() {
    let f = double_well_fixture();
    let sigmas = log_spaced(0.1 * D_EFF, 1e3 * D_EFF, 17).unwrap();
    let sys = ProtocolSystem::new(&f, TAU_FIG2, 1).unwrap();
    assert!(relative(sys.d_eff(), D_EFF) < 1e-12);
    let scan = iwm_scan(&sys, &sigmas, 0.1 * D_EFF, 1e-4).unwrap();
    let t = scan.sigma_threshold.expect("finite threshold");
    assert!(t >= D_EFF);
    // d_k ∝ σ⁻³ over the last decade.
    let tail = scan.derivative_norms.len() - 4;
    let slope = log_log_slope(&sigmas[tail..tail + 4], &scan.derivative_norms[tail..]);
    assert!((slope + 3.0).abs() < 0.1, "slope {slope}");

    let nsit = nsit_test(&sys, &scan, sigmas[16], 0.1 * D_EFF, 1e-4).unwrap();
    assert_eq!(nsit.verdict, NsitVerdict::Violated);
    assert!(nsit.l1_residual > 0.0 && nsit.l1_residual <= 2.0);
    assert!(matches!(
        nsit_test(&sys, &scan, 0.5 * t, 0.1 * D_EFF, 1e-4),
        Err(Error::IwmNotEstablished(_))
    ));

    let r = run_protocol(&f, &ProtocolConfig::new(sigmas, TAU_FIG2, 1)).unwrap();
    assert_eq!(r.verdict, Verdict::NonMacrorealistic);
    assert!(r.stability.stable);
    let a = r.delta.asymptotic_for(1).unwrap();
    assert!(a.delta.abs() > 0.0);
}

#[test]
fn double_well_collective_limit() {
    let f = double_well_fixture();
    let sigmas = log_spaced(0.1 * D_EFF, 1e3 * D_EFF, 17).unwrap();
    let r = run_protocol(&f, &ProtocolConfig::new(sigmas, TAU_FIG2, 1_000_000)).unwrap();
    assert_eq!(r.verdict, Verdict::Macrorealistic);
    assert_eq!(r.nsit.as_ref().unwrap().verdict, NsitVerdict::Holds);
    assert_eq!(r.nsit_implies_iwm, Some(true));
}

#[test]
fn delta_decays_with_n_and_matches_the_correlator_slope() {
    let f = double_well_fixture();
    let sigmas = log_spaced(1.0, 1e4, 29).unwrap();
    let ns = [1, 10, 100, 1000, 10_000, 100_000, 1_000_000];
    let t = delta_statistic(&f, &sigmas, &ns, TAU_FIG2, 1e-4, 1e-4).unwrap();
    let asym: Vec<f64> = ns
        .iter()
        .map(|&n| t.asymptotic_for(n).unwrap().delta.abs())
        .collect();
    assert!(asym.windows(2).all(|w| w[1] < w[0]));
    assert!(asym[0] > 10.0 * 1e-4 * t.scale);
    let fit = t.power_law_fit.as_ref().unwrap();
    assert!(fit.r_squared > 0.99);
    assert!(t.exponential_fit.is_some());
    // Δ + Δ_QC is the finite-difference term, which vanishes at large σ.
    for e in t.entries.iter().filter(|e| e.sigma >= 1e3) {
        assert!(
            (e.delta + e.delta_qc).abs() < 1e-6 * t.scale,
            "σ = {}, N = {}",
            e.sigma,
            e.n
        );
    }
    let mut keys: Vec<(u64, usize)> = t.entries.iter().map(|e| (e.sigma.to_bits(), e.n)).collect();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), t.entries.len());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn nsit_implies_iwm(seed in any::<u64>(), tau in 0.1f64..5.0) {
        let f = random(seed);
        let sigmas = log_spaced(0.05, 1e4, 16).unwrap();
        let r = run_protocol(&f, &ProtocolConfig::new(sigmas, tau, 1)).unwrap();
        if let Some(n) = &r.nsit {
            if n.verdict == NsitVerdict::Holds {
                prop_assert!(r.iwm.scaled_derivative_at(n.sigma_a) < r.iwm.tolerance);
                prop_assert_eq!(r.nsit_implies_iwm, Some(true));
            }
        }
        prop_assert_eq!(r.verdict == Verdict::Inconclusive, r.iwm.sigma_threshold.is_none());
    }

    #[test]
    fn refusal_below_threshold(seed in any::<u64>(), frac in 0.01f64..0.99) {
        let f = random(seed);
        let sigmas = log_spaced(0.05, 1e4, 16).unwrap();
        let sys = ProtocolSystem::new(&f, 1.0, 1).unwrap();
        let scan = iwm_scan(&sys, &sigmas, 0.1, 1e-4).unwrap();
        if let Some(t) = scan.sigma_threshold {
            prop_assert!(matches!(nsit_test(&sys, &scan, frac * t, 0.1, 1e-4), Err(Error::IwmNotEstablished(_))));
        }
    }

    #[test]
    fn eigenstates_are_macrorealistic(seed in any::<u64>(), k in 0usize..3, tau in 0.1f64..5.0) {
        let mut f = random(seed);
        f.state = f.a.eigenstate(k, 0.0).unwrap();
        let r = run_protocol(&f, &ProtocolConfig::new(log_spaced(0.05, 50.0, 10).unwrap(), tau, 1)).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Macrorealistic);
        prop_assert!(r.nsit.as_ref().unwrap().l1_residual < 1e-7);
        prop_assert!(r.stability.stable);
    }
}
