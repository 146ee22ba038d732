//! Fixture values for the 4096-point double well at ω0 = 4.3e-3, α = 5e-2.

mod common;

use common::*;
use macroreal::measurement::reduced_distribution;
use macroreal::{
    correlation_collective, effective_dimension, evolve, intensive_variance, joint_distribution,
    unmeasured_distribution, ManyBodySpec, MeasurementModel,
};

const D_EFF: f64 = 1.939926739926741e2;
const VAR_1: f64 = 3.737902981670658e3;
const REDUCED_L1: f64 = 5.042278996401712e-3;

/// Normalized ground-state weights |ψ(x_k)|² at the grid points.
fn density() -> Vec<(f64, f64)> {
    let sys = shared_double_well();
    let w: Vec<f64> = sys
        .ground_state()
        .amplitudes()
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let total: f64 = w.iter().sum();
    sys.grid()
        .points()
        .into_iter()
        .zip(w.into_iter().map(|v| v / total))
        .collect()
}

#[test]
fn effective_dimension_fixture() {
    let sys = shared_double_well();
    let d = effective_dimension(sys.ground_state(), sys.position(), 1e-6)
        .unwrap()
        .value;
    assert!(relative(d, D_EFF) < 1e-9, "{d:.17e}");
    // Grid scan: most populated points until the cumulative weight reaches 1 - 1e-6.
    let mut p = density();
    p.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut lo, mut hi, mut acc) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (x, w) in p {
        lo = lo.min(x);
        hi = hi.max(x);
        acc += w;
        if acc >= 1.0 - 1e-6 {
            break;
        }
    }
    assert!((hi - lo - d).abs() < 1e-9 * d);
}

#[test]
fn intensive_variance_fixture() {
    let sys = shared_double_well();
    let p = density();
    let m: f64 = p.iter().map(|(x, w)| x * w).sum();
    let direct: f64 = p.iter().map(|(x, w)| (x - m).powi(2) * w).sum();
    let var1 = intensive_variance(
        &ManyBodySpec::identical(1, sys.ground_state(), sys.position()).unwrap(),
    )
    .unwrap();
    assert!(relative(var1, direct) < 1e-10);
    assert!(relative(var1, VAR_1) < 1e-9, "{var1:.17e}");
    for n in [2, 10, 1000] {
        let v = intensive_variance(
            &ManyBodySpec::identical(n, sys.ground_state(), sys.position()).unwrap(),
        )
        .unwrap();
        assert!(relative(v * n as f64, var1) < 1e-12);
    }
}

#[test]
fn reduced_distribution_fixture() {
    let sys = shared_double_well();
    let (g, x) = (sys.ground_state(), sys.position());
    let prop = sys.propagator(TAU_FIG2).unwrap();
    let m = MeasurementModel::new(x, D_EFF / 10.0).unwrap();
    let j = joint_distribution(g, &m, &prop, &m).unwrap();
    assert!((j.normalization() - 1.0).abs() < 1e-7);
    let r = reduced_distribution(&j);
    let u = unmeasured_distribution(g, x, &prop, &m).unwrap();
    assert!((r.normalization() - 1.0).abs() < 1e-7);
    let l1 = r.l1_distance(&u).unwrap();
    assert!(relative(l1, REDUCED_L1) < 1e-6, "{l1:.17e}");
}

#[test]
fn collective_correlator_approaches_product_of_means() {
    let sys = shared_double_well();
    let (g, x) = (sys.ground_state(), sys.position());
    let prop = sys.propagator(TAU_FIG2).unwrap();
    let mean_a = x.expectation(g).unwrap();
    let mean_b = x.expectation(&evolve(g, &prop).unwrap()).unwrap();
    let ns = [1e2, 1e3, 1e4, 1e5, 1e6];
    let mut gaps = Vec::new();
    let mut single = 0.0;
    for (k, &n) in [1.0].iter().chain(&ns).enumerate() {
        let spec = ManyBodySpec::identical(n as usize, g, x).unwrap();
        let c = correlation_collective(&spec, x, &prop, D_EFF)
            .unwrap()
            .value;
        let gap = (c - mean_a * mean_b).abs();
        if k == 0 {
            single = c.abs();
        } else {
            gaps.push(gap);
        }
    }
    let slope = log_log_slope(&ns, &gaps);
    assert!((slope + 1.0).abs() < 1e-3, "slope {slope}");
    assert!(gaps[4] < 1e-4 * single, "{} vs {single}", gaps[4]);
}
