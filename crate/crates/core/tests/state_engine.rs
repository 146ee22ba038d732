mod common;

use common::*;
use macroreal::hamiltonian::double_well_hamiltonian;
use macroreal::{
    build_grid, build_position_observable, diagonalize, evolve, heisenberg_matrix_elements, Basis,
    CMat, DoubleWell, HermitianObservable, KineticScheme, OscillatorSystem, Propagator,
    QuantumState, SpatialGrid, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn grid_examples() {
    let g = build_grid(0.0, 1.0, 8).unwrap();
    assert!((g.spacing() - 1.0 / 7.0).abs() < 1e-15);
    assert!(build_grid(1.0, -1.0, 64).is_err());
}

#[test]
fn position_observable_is_the_grid() {
    let g = SpatialGrid::new(-3.0, 5.0, 33).unwrap();
    let x = diagonalize(&build_position_observable(&g)).unwrap();
    assert_eq!(x.eigenvalues().unwrap(), g.points().as_slice());
    let m = x.to_dense();
    for (k, p) in g.points().iter().enumerate() {
        assert_eq!(m.get(k, k).re, *p);
    }
    // [X, f(X)] = 0 for f(X) = X² + sin X, both diagonal in the grid basis.
    let f: Vec<f64> = g.points().iter().map(|x| x * x + x.sin()).collect();
    let fx = HermitianObservable::diagonal("f", f, Basis::Grid(g))
        .unwrap()
        .to_dense();
    let comm = m.matmul(&fx).max_abs_diff(&fx.matmul(&m));
    assert!(comm < 1e-12);
}

#[test]
fn pauli_examples() {
    let b = Basis::Computational(2);
    let z = diagonalize(&HermitianObservable::diagonal("Z", vec![1.0, -1.0], b.clone()).unwrap())
        .unwrap();
    assert_eq!(z.eigenvalues().unwrap(), &[-1.0, 1.0]);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let x = CMat::from_rows(&[vec![zero, one], vec![one, zero]]).unwrap();
    let x = diagonalize(&HermitianObservable::dense("X", x, b).unwrap()).unwrap();
    assert_eq!(x.eigenvalues().unwrap().len(), 2);
    assert!((x.eigenvalues().unwrap()[0] + 1.0).abs() < 1e-14);
    let v0 = x.eigenstate(0, 0.0).unwrap().coordinates();
    assert!((v0[0] + v0[1]).norm() < 1e-14);
}

#[test]
fn harmonic_gaps_ground_state_and_parity() {
    let w = OMEGA0;
    let grid = SpatialGrid::new(-1200.0, 1200.0, 4096).unwrap();
    let sys = OscillatorSystem::harmonic(grid, w, KineticScheme::Spectral).unwrap();
    let e = sys.hamiltonian().eigenvalues().unwrap();
    for n in 0..10 {
        assert!(
            relative(e[n + 1] - e[n], w) < 1e-4,
            "gap {n}: {}",
            (e[n + 1] - e[n]) / w
        );
    }
    let psi = sys.ground_state();
    let dx = grid.spacing();
    let analytic: Vec<C64> = grid
        .points()
        .iter()
        .map(|x| {
            C64::new(
                (w / std::f64::consts::PI).powf(0.25) * (-w * x * x / 2.0).exp() * dx.sqrt(),
                0.0,
            )
        })
        .collect();
    let overlap: C64 = analytic
        .iter()
        .zip(psi.coordinates())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let norm: f64 = analytic.iter().map(|a| a.norm_sqr()).sum();
    assert!(1.0 - overlap.norm_sqr() / norm > -1e-12);
    assert!(1.0 - overlap.norm_sqr() / norm < 1e-8);
    assert!(sys.position().expectation(psi).unwrap().abs() < 1e-10);
}

#[test]
fn double_well_without_barrier_is_harmonic() {
    let grid = SpatialGrid::new(-40.0, 40.0, 256).unwrap();
    let w = 0.1;
    let params = DoubleWell {
        omega0: w,
        alpha: 1e3,
        barrier_height: 0.0,
    };
    let sys = OscillatorSystem::double_well(grid, &params, KineticScheme::Spectral).unwrap();
    let e = sys.hamiltonian().eigenvalues().unwrap();
    for n in 0..10 {
        assert!(relative(e[n + 1] - e[n], w) < 1e-6);
    }
}

#[test]
fn double_well_doublet_parity_and_convergence() {
    let fine = shared_double_well();
    let coarse = double_well(2048);
    let ef = fine.hamiltonian().eigenvalues().unwrap();
    let ec = coarse.hamiltonian().eigenvalues().unwrap();
    // Lowest pair nearly degenerate relative to the intra-well gap.
    let splitting = ef[1] - ef[0];
    let intra = ef[2] - ef[0];
    assert!(
        splitting < 1e-9 * intra,
        "splitting {splitting:e}, gap {intra:e}"
    );
    // Richardson check on E0 and the 20 lowest levels.
    assert!(relative(ec[0], ef[0]) < 1e-6, "E0 {} vs {}", ec[0], ef[0]);
    for n in 0..20 {
        assert!(relative(ec[n], ef[n]) < 1e-5, "level {n}");
    }
    // Definite parity: ⟨n|X|n⟩ = 0.
    let x = fine.position();
    for n in 0..20 {
        assert!(
            x.expectation(&fine.level(n).unwrap()).unwrap().abs() < 1e-9,
            "level {n}"
        );
    }
}

#[test]
fn spectral_reconstruction_of_grid_hamiltonian() {
    let grid = SpatialGrid::new(-1200.0, 1200.0, 1024).unwrap();
    let params = DoubleWell::new(OMEGA0, ALPHA);
    let raw = double_well_hamiltonian(&grid, &params, KineticScheme::FiniteDifference).unwrap();
    let h = diagonalize(&raw).unwrap();
    let m = raw.to_dense();
    let rec = reconstruct(&h);
    assert!(rec.max_abs_diff(&m) < 1e-8 * m.max_abs());
}

#[test]
fn evolution_examples() {
    let grid = SpatialGrid::new(-40.0, 40.0, 256).unwrap();
    let w = 0.1;
    let sys = OscillatorSystem::harmonic(grid, w, KineticScheme::Spectral).unwrap();
    let h = sys.hamiltonian();
    let x = sys.position();
    // Stationary state.
    let n3 = sys.level(3).unwrap();
    let later = evolve(&n3, &sys.propagator(17.0).unwrap()).unwrap();
    let f: C64 = n3
        .coordinates()
        .iter()
        .zip(later.coordinates())
        .map(|(a, b)| a.conj() * b)
        .sum();
    assert!((f.norm() - 1.0).abs() < 1e-10);
    assert!((x.expectation(&later).unwrap() - x.expectation(&n3).unwrap()).abs() < 1e-10);
    // τ = 0 is the identity.
    let same = evolve(&n3, &sys.propagator(0.0).unwrap()).unwrap();
    let drift = same
        .coordinates()
        .iter()
        .zip(n3.coordinates())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(drift < 1e-12);
    // (|0⟩ + |1⟩)/√2: ⟨X(τ)⟩ = cos(ω0τ)·2Re(½⟨0|X|1⟩).
    let c0 = sys.level(0).unwrap().coordinates();
    let c1 = sys.level(1).unwrap().coordinates();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sup: Vec<C64> = c0.iter().zip(&c1).map(|(a, b)| (a + b) * r).collect();
    let basis = h.basis().clone();
    let psi = QuantumState::from_coordinates(sup, basis, 0.0).unwrap();
    let x01 = (1.0 / (2.0 * w)).sqrt();
    let x0 = x.expectation(&psi).unwrap();
    assert!((x0.abs() - x01).abs() < 1e-6 * x01);
    for tau in [3.0, 10.0, 25.0, 40.0] {
        let xt = x
            .expectation(&evolve(&psi, &sys.propagator(tau).unwrap()).unwrap())
            .unwrap();
        assert!((xt - x0 * (w * tau).cos()).abs() < 1e-6 * x01, "τ = {tau}");
    }
}

#[test]
fn heisenberg_examples() {
    let f = random_fixture(4, 7);
    let prop0 = Propagator::new(&f.h, 0.0).unwrap();
    // τ = 0, B = A → diag(a) in A's eigenbasis.
    let m = heisenberg_matrix_elements(&f.a, &prop0, &f.a).unwrap();
    let a = f.a.eigenvalues().unwrap();
    for (i, &ai) in a.iter().enumerate() {
        for j in 0..4 {
            let expect = if i == j { ai } else { 0.0 };
            assert!((m.get(i, j) - C64::new(expect, 0.0)).norm() < 1e-12);
        }
    }
    // [H, B] = 0 with B = H → τ independent.
    let p1 = Propagator::new(&f.h, 1.3).unwrap();
    let m0 = heisenberg_matrix_elements(&f.h, &prop0, &f.a).unwrap();
    let m1 = heisenberg_matrix_elements(&f.h, &p1, &f.a).unwrap();
    assert!(m0.max_abs_diff(&m1) < 1e-12);
    assert!(m1.hermiticity_defect() < 1e-9);
}

/// V diag(λ) V†.
fn reconstruct(h: &HermitianObservable) -> CMat {
    let sp = h.spectrum().unwrap();
    let v = sp.matrix();
    let d: Vec<C64> = sp.values().iter().map(|&x| C64::new(x, 0.0)).collect();
    v.scale_cols(&d).matmul(&v.adjoint())
}

fn random_model(seed: u64, n: usize) -> (HermitianObservable, QuantumState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Basis::Computational(n);
    let h = diagonalize(
        &HermitianObservable::dense("H", random_hermitian(&mut rng, n, 2.0), basis.clone())
            .unwrap(),
    )
    .unwrap();
    (h, random_state(&mut rng, basis))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn propagators_are_unitary(seed in any::<u64>(), n in 2usize..9, tau in -50.0f64..50.0) {
        let (h, _) = random_model(seed, n);
        let p = Propagator::new(&h, tau).unwrap();
        prop_assert!(p.unitarity_defect() < 1e-8);
    }

    #[test]
    fn evolution_conserves_norm_and_energy(seed in any::<u64>(), n in 2usize..9, tau in -50.0f64..50.0) {
        let (h, psi) = random_model(seed, n);
        let later = evolve(&psi, &Propagator::new(&h, tau).unwrap()).unwrap();
        prop_assert!((later.norm_sq() - 1.0).abs() < 1e-10);
        let e0 = h.expectation(&psi).unwrap();
        let e1 = h.expectation(&later).unwrap();
        prop_assert!((e1 - e0).abs() <= 1e-9 * e0.abs().max(h.max_abs()));
    }

    #[test]
    fn diagonalization_reconstructs(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, n, 3.0);
        let h = diagonalize(&HermitianObservable::dense("M", m.clone(), Basis::Computational(n)).unwrap()).unwrap();
        prop_assert!(reconstruct(&h).max_abs_diff(&m) < 1e-8 * m.max_abs().max(1e-300));
        prop_assert!(h.spectrum().unwrap().unitarity_defect() < 1e-10);
    }
}
