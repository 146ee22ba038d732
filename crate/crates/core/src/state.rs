use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::C64;

/// Representation in which amplitudes are expressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Wavefunction values ψ(x_k) on a spatial grid.
    Grid(SpatialGrid),
    /// Plain finite-dimensional basis of an explicit matrix model.
    Computational(usize),
    /// Coefficients in the eigenbasis of the named observable.
    Eigen { observable: String, dim: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Grid(g) => g.len(),
            Basis::Computational(n) => *n,
            Basis::Eigen { dim, .. } => *dim,
        }
    }

    /// Factor converting amplitudes into orthonormal coordinates.
    pub(crate) fn coordinate_scale(&self) -> f64 {
        match self {
            Basis::Grid(g) => g.spacing().sqrt(),
            _ => 1.0,
        }
    }

    pub(crate) fn describe(&self) -> String {
        match self {
            Basis::Grid(g) => format!("grid[{}, {}; {}]", g.x_min(), g.x_max(), g.len()),
            Basis::Computational(n) => format!("computational({n})"),
            Basis::Eigen { observable, dim } => format!("eigenbasis of {observable} ({dim})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    basis: Basis,
    time: f64,
}

impl QuantumState {
    /// Wraps amplitudes without touching the norm.
    pub fn new(amplitudes: Vec<C64>, basis: Basis, time: f64) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("state amplitudes must be finite"));
        }
        Ok(QuantumState {
            amplitudes,
            basis,
            time,
        })
    }

    pub fn normalized(amplitudes: Vec<C64>, basis: Basis, time: f64) -> Result<Self> {
        let mut s = QuantumState::new(amplitudes, basis, time)?;
        let n = s.norm_sq();
        if n <= 0.0 {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        let f = 1.0 / n.sqrt();
        s.amplitudes.iter_mut().for_each(|z| *z *= f);
        Ok(s)
    }

    /// Builds a state from orthonormal coordinates (Σ|v|² = 1 for unit states).
    pub fn from_coordinates(coords: Vec<C64>, basis: Basis, time: f64) -> Result<Self> {
        let f = 1.0 / basis.coordinate_scale();
        QuantumState::new(coords.into_iter().map(|z| z * f).collect(), basis, time)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Σ w_k |c_k|² with trapezoid weights on a grid.
    pub fn norm_sq(&self) -> f64 {
        match &self.basis {
            Basis::Grid(g) => {
                let w = g.weights();
                self.amplitudes
                    .iter()
                    .zip(&w)
                    .map(|(z, w)| w * z.norm_sqr())
                    .sum()
            }
            _ => self.amplitudes.iter().map(C64::norm_sqr).sum(),
        }
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    /// Amplitudes rescaled to an orthonormal-coordinate vector.
    pub fn coordinates(&self) -> Vec<C64> {
        let f = self.basis.coordinate_scale();
        self.amplitudes.iter().map(|z| z * f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn grid_norm_uses_quadrature() {
        let g = build_grid(-10.0, 10.0, 401).unwrap();
        let amps: Vec<C64> = g
            .points()
            .iter()
            .map(|x| C64::new((-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0))
            .collect();
        let s = QuantumState::new(amps, Basis::Grid(g), 0.0).unwrap();
        assert!(s.is_normalized(1e-10));
        let c = s.coordinates();
        assert!((c.iter().map(C64::norm_sqr).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dimension_is_checked() {
        assert!(QuantumState::new(vec![C64::new(1.0, 0.0)], Basis::Computational(2), 0.0).is_err());
    }

    #[test]
    fn normalizes() {
        let s = QuantumState::normalized(
            vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)],
            Basis::Computational(2),
            0.0,
        )
        .unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!(s.is_normalized(1e-14));
    }
}
