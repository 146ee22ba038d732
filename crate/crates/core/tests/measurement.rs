mod common;

use common::*;
use macroreal::measurement::reduced_distribution;
use macroreal::{
    diagonalize, joint_distribution, kraus_amplitude, pointer_distribution, post_measurement_state,
    two_time_state, unmeasured_distribution, Basis, CMat, HermitianObservable, MeasurementModel,
    PointerDistribution, Propagator, QuantumState, UniformGrid, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn amp(sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25)
}

fn a_eigenstate(f: &Fixture, k: usize) -> QuantumState {
    f.a.eigenstate(k, 0.0).unwrap()
}

fn max_pointwise(p: &PointerDistribution, q: &PointerDistribution) -> f64 {
    assert_eq!(p.grid, q.grid);
    p.density
        .iter()
        .zip(&q.density)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn kraus_examples() {
    let (a, s) = (0.4, 0.3);
    assert_eq!(kraus_amplitude(a, a, s).unwrap(), amp(s));
    assert!((kraus_amplitude(a + 2.0 * s, a, s).unwrap() - amp(s) * (-1.0f64).exp()).abs() < 1e-15);
    let g = UniformGrid::covering(a - 12.0 * s, a + 12.0 * s, s / 64.0).unwrap();
    let v: Vec<f64> = g
        .points()
        .iter()
        .map(|&y| kraus_amplitude(y, a, s).unwrap().powi(2))
        .collect();
    assert!((g.integrate(&v) - 1.0).abs() < 1e-10);
    assert!(kraus_amplitude(0.0, 0.0, 0.0).is_err());
}

#[test]
fn post_measurement_examples() {
    let f = random_fixture(3, 11);
    let a = f.a.eigenvalues().unwrap().to_vec();
    // Eigenstate input stays on |a_k⟩.
    let m = MeasurementModel::new(&f.a, 0.7).unwrap();
    for y in [-2.0, 0.1, 3.0] {
        let out = post_measurement_state(&a_eigenstate(&f, 1), &m, y)
            .unwrap()
            .coordinates();
        assert!(out[0].norm() < 1e-15 && out[2].norm() < 1e-15 && out[1].norm() > 0.0);
    }
    // σ = 1, y = 0 against the explicit diagonal Kraus matrix.
    let m1 = MeasurementModel::new(&f.a, 1.0).unwrap();
    let c = f.a.eigen_coefficients(&f.state).unwrap();
    let kraus = CMat::from_fn(3, 3, |i, j| {
        if i == j {
            C64::new(amp(1.0) * (-a[i] * a[i] / 4.0).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let expect = kraus.mul_vec(&c);
    let got = post_measurement_state(&f.state, &m1, 0.0)
        .unwrap()
        .coordinates();
    for (g, e) in got.iter().zip(&expect) {
        assert!((g - e).norm() < 1e-15);
    }
    // ‖ψ_A‖² is the pointer density at y_A.
    let p = pointer_distribution(&f.state, &m1).unwrap();
    for k in [0, p.density.len() / 3, p.density.len() / 2] {
        let y = p.grid.point(k);
        let n = post_measurement_state(&f.state, &m1, y).unwrap().norm_sq();
        assert!((n - p.density[k]).abs() < 1e-14);
    }
}

#[test]
fn projective_limit_of_post_measurement_state() {
    let f = random_fixture(4, 5);
    let a = f.a.eigenvalues().unwrap().to_vec();
    let gap = a
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    for k in 0..4 {
        let mut last = -1.0;
        for scale in [1.0, 0.1, 0.01] {
            let m = MeasurementModel::new(&f.a, scale * gap).unwrap();
            let out = post_measurement_state(&f.state, &m, a[k])
                .unwrap()
                .coordinates();
            let fid = out[k].norm_sqr() / out.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!(fid >= last, "fidelity must grow as σ shrinks");
            last = fid;
        }
        assert!(1.0 - last < 1e-12);
    }
}

#[test]
fn pointer_distribution_examples() {
    let f = random_fixture(5, 3);
    let a = f.a.eigenvalues().unwrap().to_vec();
    let s = 0.45;
    let m = MeasurementModel::new(&f.a, s).unwrap();
    let p = pointer_distribution(&a_eigenstate(&f, 2), &m).unwrap();
    for (y, d) in p.grid.points().iter().zip(&p.density) {
        let g = (-(y - a[2]).powi(2) / (2.0 * s * s)).exp()
            / (2.0 * std::f64::consts::PI * s * s).sqrt();
        assert!((d - g).abs() < 1e-14);
    }
    assert!((p.mean() - a[2]).abs() < 1e-8);
    let q = pointer_distribution(&f.state, &m).unwrap();
    assert!((q.normalization() - 1.0).abs() < 1e-8);
    assert!((q.mean() - f.a.expectation(&f.state).unwrap()).abs() < 1e-8);
    assert!(q.density.iter().all(|&d| d >= 0.0));
    assert!(p.to_csv().starts_with("y,density\n"));
}

#[test]
fn two_time_state_examples() {
    let f = random_fixture(3, 21);
    let a = f.a.eigenvalues().unwrap().to_vec();
    let (sa, sb, ya, yb) = (0.6, 0.9, 0.2, -0.5);
    let ma = MeasurementModel::new(&f.a, sa).unwrap();
    let mb = MeasurementModel::new(&f.a, sb).unwrap();
    let p0 = Propagator::new(&f.h, 0.0).unwrap();
    let got = two_time_state(&f.state, &ma, &p0, &mb, ya, yb)
        .unwrap()
        .coordinates();
    let c = f.a.eigen_coefficients(&f.state).unwrap();
    for i in 0..3 {
        let k = kraus_amplitude(ya, a[i], sa).unwrap() * kraus_amplitude(yb, a[i], sb).unwrap();
        assert!((got[i] - c[i] * k).norm() < 1e-15);
    }
}

#[test]
fn joint_distribution_examples() {
    let f = random_fixture(3, 8);
    let prop = Propagator::new(&f.h, 0.77).unwrap();
    let ma = MeasurementModel::new(&f.a, 0.5).unwrap();
    let mb = MeasurementModel::new(&f.b, 0.8).unwrap();
    // Normalization and the first-marginal identity.
    let j = joint_distribution(&f.state, &ma, &prop, &mb).unwrap();
    assert!((j.normalization() - 1.0).abs() < 1e-8);
    let single = pointer_distribution(&f.state, &ma).unwrap();
    assert!(max_pointwise(&j.marginal_a(), &single) < 1e-7);
    assert!(j.to_csv().starts_with("y_A,y_B,density\n"));
    // ‖ψ_AB‖² is the joint density.
    let (ia, ib) = (j.y_a.len / 2, j.y_b.len / 3);
    let s = two_time_state(&f.state, &ma, &prop, &mb, j.y_a.point(ia), j.y_b.point(ib)).unwrap();
    assert!((s.norm_sq() - j.get(ia, ib)).abs() < 1e-13);

    // Eigenstate of A: exact product, reduced equals unmeasured.
    let e = a_eigenstate(&f, 0);
    let je = joint_distribution(&e, &ma, &prop, &mb).unwrap();
    let pa = je.marginal_a();
    let pb = je.marginal_b();
    let dev = (0..je.y_a.len)
        .flat_map(|i| (0..je.y_b.len).map(move |k| (i, k)))
        .map(|(i, k)| (je.get(i, k) - pa.density[i] * pb.density[k]).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-9);
    let unmeasured = unmeasured_distribution(&e, &f.a, &prop, &mb).unwrap();
    let reduced = reduced_distribution(&je);
    assert!(max_pointwise(&reduced, &unmeasured) < 1e-7);
    assert!((reduced.normalization() - 1.0).abs() < 1e-7);
}

#[test]
fn narrow_first_pointer_makes_stripes() {
    let basis = Basis::Computational(2);
    let a =
        diagonalize(&HermitianObservable::diagonal("A", vec![-1.0, 1.0], basis.clone()).unwrap())
            .unwrap();
    let one = C64::new(1.0, 0.0);
    let h = diagonalize(
        &HermitianObservable::dense(
            "H",
            CMat::from_rows(&[vec![one, one * 0.3], vec![one * 0.3, -one]]).unwrap(),
            basis.clone(),
        )
        .unwrap(),
    )
    .unwrap();
    let psi =
        QuantumState::normalized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)], basis, 0.0).unwrap();
    let prop = Propagator::new(&h, 0.4).unwrap();
    let j = joint_distribution(
        &psi,
        &MeasurementModel::new(&a, 0.01).unwrap(),
        &prop,
        &MeasurementModel::new(&a, 0.5).unwrap(),
    )
    .unwrap();
    let m = j.marginal_a();
    let w = m.grid.weights();
    let near = |c: f64| -> f64 {
        m.grid
            .points()
            .iter()
            .zip(&m.density)
            .zip(&w)
            .filter(|((y, _), _)| (*y - c).abs() < 0.5)
            .map(|((_, d), w)| d * w)
            .sum()
    };
    assert!((near(-1.0) - 0.36).abs() < 1e-9);
    assert!((near(1.0) - 0.64).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn completeness_and_calibration(seed in any::<u64>(), n in 2usize..7, sigma in 0.05f64..5.0) {
        let f = random_fixture(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let psi = random_state(&mut rng, Basis::Computational(n));
        let p = pointer_distribution(&psi, &MeasurementModel::new(&f.a, sigma).unwrap()).unwrap();
        prop_assert!((p.normalization() - 1.0).abs() < 1e-8);
        prop_assert!((p.mean() - f.a.expectation(&psi).unwrap()).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn first_marginal_consistency(seed in any::<u64>(), sa in 0.1f64..3.0, sb in 0.1f64..3.0, tau in 0.0f64..10.0) {
        let f = random_fixture(3, seed);
        let ma = MeasurementModel::new(&f.a, sa).unwrap();
        let j = joint_distribution(&f.state, &ma, &Propagator::new(&f.h, tau).unwrap(), &MeasurementModel::new(&f.b, sb).unwrap()).unwrap();
        prop_assert!((j.normalization() - 1.0).abs() < 1e-7);
        prop_assert!(max_pointwise(&j.marginal_a(), &pointer_distribution(&f.state, &ma).unwrap()) < 1e-7);
        prop_assert!(j.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn eigenstates_factorize(seed in any::<u64>(), k in 0usize..3, sa in 0.1f64..3.0, tau in 0.0f64..10.0) {
        let f = random_fixture(3, seed);
        let e = f.a.eigenstate(k, 0.0).unwrap();
        let j = joint_distribution(&e, &MeasurementModel::new(&f.a, sa).unwrap(), &Propagator::new(&f.h, tau).unwrap(), &MeasurementModel::new(&f.b, 0.7).unwrap()).unwrap();
        let (pa, pb) = (j.marginal_a(), j.marginal_b());
        for i in (0..j.y_a.len).step_by(7) {
            for l in (0..j.y_b.len).step_by(7) {
                prop_assert!((j.get(i, l) - pa.density[i] * pb.density[l]).abs() < 1e-9);
            }
        }
    }
}
