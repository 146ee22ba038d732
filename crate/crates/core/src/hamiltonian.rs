//! Grid Hamiltonians `P²/2 + V(X)` in atomic units.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::CMat;
use crate::observable::HermitianObservable;
use crate::state::Basis;

/// Number of low-lying levels that must sit below the boundary potential.
pub const GUARDED_LEVELS: usize = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticScheme {
    /// Second-order central differences.
    FiniteDifference,
    /// Sinc (Fourier) discrete-variable representation.
    #[default]
    Spectral,
}

/// `V(x) = ω0² x²/2 + V0 sech²(αx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    pub omega0: f64,
    pub alpha: f64,
    #[serde(default = "unit_barrier")]
    pub barrier_height: f64,
}

fn unit_barrier() -> f64 {
    1.0
}

impl DoubleWell {
    pub fn new(omega0: f64, alpha: f64) -> Self {
        DoubleWell {
            omega0,
            alpha,
            barrier_height: 1.0,
        }
    }

    pub fn potential(&self, x: f64) -> f64 {
        let s = 1.0 / (self.alpha * x).cosh();
        0.5 * self.omega0 * self.omega0 * x * x + self.barrier_height * s * s
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid(format!(
                "omega0 must be positive, got {}",
                self.omega0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.barrier_height >= 0.0 && self.barrier_height.is_finite()) {
            return Err(Error::invalid(format!(
                "barrier height must be non-negative, got {}",
                self.barrier_height
            )));
        }
        Ok(())
    }
}

pub fn build_double_well_hamiltonian(
    grid: &SpatialGrid,
    omega0: f64,
    alpha: f64,
) -> Result<HermitianObservable> {
    double_well_hamiltonian(
        grid,
        &DoubleWell::new(omega0, alpha),
        KineticScheme::default(),
    )
}

pub fn double_well_hamiltonian(
    grid: &SpatialGrid,
    params: &DoubleWell,
    kinetic: KineticScheme,
) -> Result<HermitianObservable> {
    params.validate()?;
    let ceiling = (GUARDED_LEVELS as f64 + 0.5) * params.omega0 + params.barrier_height;
    check_boundary(grid, |x| params.potential(x), ceiling)?;
    grid_hamiltonian(grid, |x| params.potential(x), kinetic)
}

pub fn build_harmonic_hamiltonian(grid: &SpatialGrid, omega0: f64) -> Result<HermitianObservable> {
    harmonic_hamiltonian(grid, omega0, KineticScheme::default())
}

pub fn harmonic_hamiltonian(
    grid: &SpatialGrid,
    omega0: f64,
    kinetic: KineticScheme,
) -> Result<HermitianObservable> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::invalid(format!(
            "omega0 must be positive, got {omega0}"
        )));
    }
    let v = |x: f64| 0.5 * omega0 * omega0 * x * x;
    check_boundary(grid, v, (GUARDED_LEVELS as f64 + 0.5) * omega0)?;
    grid_hamiltonian(grid, v, kinetic)
}

pub fn build_position_observable(grid: &SpatialGrid) -> HermitianObservable {
    HermitianObservable::diagonal("X", grid.points(), Basis::Grid(*grid))
        .expect("grid dimension matches")
}

fn check_boundary(grid: &SpatialGrid, v: impl Fn(f64) -> f64, ceiling: f64) -> Result<()> {
    let edge = v(grid.x_min()).min(v(grid.x_max()));
    if edge <= ceiling {
        return Err(Error::regime(format!(
            "grid too narrow: boundary potential {edge:.4e} a.u. does not exceed the estimated \
             level {GUARDED_LEVELS} energy {ceiling:.4e} a.u.; widen [x_min, x_max]"
        )));
    }
    Ok(())
}

fn grid_hamiltonian(
    grid: &SpatialGrid,
    v: impl Fn(f64) -> f64,
    kinetic: KineticScheme,
) -> Result<HermitianObservable> {
    let n = grid.len();
    let dx = grid.spacing();
    let inv = 1.0 / (dx * dx);
    let x = grid.points();
    let h = match kinetic {
        KineticScheme::FiniteDifference => Mat::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => inv + v(x[i]),
            1 => -0.5 * inv,
            _ => 0.0,
        }),
        KineticScheme::Spectral => Mat::from_fn(n, n, |i, j| {
            if i == j {
                std::f64::consts::PI.powi(2) / 6.0 * inv + v(x[i])
            } else {
                let d = i.abs_diff(j);
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                sign * inv / (d * d) as f64
            }
        }),
    };
    HermitianObservable::dense("H", CMat::from_real(h), Basis::Grid(*grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::observable::diagonalize;

    #[test]
    fn harmonic_levels_small_grid() {
        let g = build_grid(-12.0, 12.0, 241).unwrap();
        let h =
            diagonalize(&harmonic_hamiltonian(&g, 1.0, KineticScheme::Spectral).unwrap()).unwrap();
        let e = h.eigenvalues().unwrap();
        for (n, en) in e.iter().take(10).enumerate() {
            assert!((en - (n as f64 + 0.5)).abs() < 1e-8, "level {n}: {en}");
        }
    }

    #[test]
    fn finite_difference_is_second_order() {
        let e0 = |n: usize| {
            let g = build_grid(-12.0, 12.0, n).unwrap();
            let h = diagonalize(
                &harmonic_hamiltonian(&g, 1.0, KineticScheme::FiniteDifference).unwrap(),
            )
            .unwrap();
            h.eigenvalues().unwrap()[0] - 0.5
        };
        let ratio = e0(121).abs() / e0(241).abs();
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn narrow_grid_refused() {
        let g = build_grid(-50.0, 50.0, 64).unwrap();
        assert!(matches!(
            build_double_well_hamiltonian(&g, 4.3e-3, 5e-2),
            Err(Error::NumericalRegime(_))
        ));
    }

    #[test]
    fn position_is_grid() {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        let x = build_position_observable(&g);
        let x = diagonalize(&x).unwrap();
        assert_eq!(x.eigenvalues().unwrap(), g.points().as_slice());
    }

    #[test]
    fn potential_shape() {
        let dw = DoubleWell::new(4.3e-3, 5e-2);
        assert!((dw.potential(0.0) - 1.0).abs() < 1e-15);
        assert!(dw.potential(100.0) < dw.potential(0.0));
        assert_eq!(dw.potential(37.0), dw.potential(-37.0));
    }
}
