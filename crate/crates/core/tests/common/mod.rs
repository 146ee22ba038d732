#![allow(dead_code)]

use std::sync::OnceLock;

use macroreal::{
    diagonalize, Basis, CMat, DoubleWell, HermitianObservable, KineticScheme, OscillatorSystem,
    QuantumState, SpatialGrid, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OMEGA0: f64 = 4.3e-3;
pub const ALPHA: f64 = 5e-2;
pub const TAU_FIG2: f64 = 33.3 * std::f64::consts::PI;

/// Random finite-dimensional model: state, A (diagonal, distinct), B, H.
pub struct Fixture {
    pub state: QuantumState,
    pub a: HermitianObservable,
    pub b: HermitianObservable,
    pub h: HermitianObservable,
}

#[allow(clippy::needless_range_loop)]
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        m[i][i] = C64::new(scale * rng.random_range(-1.0..1.0), 0.0);
        for j in 0..i {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            m[i][j] = z;
            m[j][i] = z.conj();
        }
    }
    CMat::from_rows(&m).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, basis: Basis) -> QuantumState {
    let amps = (0..basis.dim())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    QuantumState::normalized(amps, basis, 0.0).unwrap()
}

pub fn random_fixture(n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Basis::Computational(n);
    // Distinct eigenvalues with gaps of at least 0.3.
    let mut values: Vec<f64> = (0..n)
        .map(|k| k as f64 * 0.8 + rng.random_range(0.0..0.5))
        .collect();
    let shift = values.iter().sum::<f64>() / n as f64;
    values.iter_mut().for_each(|v| *v -= shift);
    let a =
        diagonalize(&HermitianObservable::diagonal("A", values, basis.clone()).unwrap()).unwrap();
    let b = diagonalize(
        &HermitianObservable::dense("B", random_hermitian(&mut rng, n, 1.0), basis.clone())
            .unwrap(),
    )
    .unwrap();
    let h = diagonalize(
        &HermitianObservable::dense("H", random_hermitian(&mut rng, n, 1.0), basis.clone())
            .unwrap(),
    )
    .unwrap();
    let state = random_state(&mut rng, basis);
    Fixture { state, a, b, h }
}

/// Largest |E_n - E_m| of H; T = 2π/that is the fastest period.
pub fn fastest_period(h: &HermitianObservable) -> f64 {
    let e = h.eigenvalues().unwrap();
    2.0 * std::f64::consts::PI / (e[e.len() - 1] - e[0])
}

pub fn relative(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

/// Double well at the default parameters on [-1200, 1200] with `n` points.
pub fn double_well(n: usize) -> OscillatorSystem {
    let grid = SpatialGrid::new(-1200.0, 1200.0, n).unwrap();
    OscillatorSystem::double_well(
        grid,
        &DoubleWell::new(OMEGA0, ALPHA),
        KineticScheme::Spectral,
    )
    .unwrap()
}

/// Shared 4096-point double well, built once per test binary.
pub fn shared_double_well() -> &'static OscillatorSystem {
    static SYS: OnceLock<OscillatorSystem> = OnceLock::new();
    SYS.get_or_init(|| double_well(4096))
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
