use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1-D spatial grid `x_k = x_min + k dx`, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

pub fn build_grid(x_min: f64, x_max: f64, n_points: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(x_min, x_max, n_points)
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::invalid(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 8 {
            return Err(Error::invalid(format!(
                "grid needs at least 8 points, got {n_points}"
            )));
        }
        Ok(SpatialGrid {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_points, self.spacing())
    }

    /// True when `x_k = -x_{n-1-k}` up to rounding.
    pub fn is_mirror_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() <= 1e-12 * (self.x_max - self.x_min)
    }
}

/// Uniform pointer-coordinate grid used for measurement readouts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) || len < 2 {
            return Err(Error::invalid(
                "uniform grid needs a positive finite step and at least 2 points",
            ));
        }
        Ok(UniformGrid { start, step, len })
    }

    /// Smallest grid with spacing `step` starting at `lo` and reaching `hi`.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi >= lo) {
            return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
        }
        let len = ((hi - lo) / step).ceil() as usize + 1;
        UniformGrid::new(lo, step, len.max(2))
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len, self.step)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len);
        let inner: f64 = values[1..self.len - 1].iter().sum();
        self.step * (inner + 0.5 * (values[0] + values[self.len - 1]))
    }
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_endpoints() {
        let g = build_grid(-1200.0, 1200.0, 4096).unwrap();
        assert!((g.spacing() - 2400.0 / 4095.0).abs() < 1e-14);
        assert_eq!(g.point(0), -1200.0);
        assert!((g.point(4095) - 1200.0).abs() < 1e-10);
        assert!(g.is_mirror_symmetric());
    }

    #[test]
    fn small_grid_spacing_and_weights() {
        let g = build_grid(0.0, 1.0, 8).unwrap();
        assert!((g.spacing() - 1.0 / 7.0).abs() < 1e-15);
        let g = build_grid(-1000.0, 1000.0, 4096).unwrap();
        assert!((g.spacing() - 2000.0 / 4095.0).abs() < 1e-13);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 2000.0).abs() < 1e-12 * 2000.0);
    }

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(build_grid(1.0, 1.0, 10).is_err());
        assert!(build_grid(0.0, 1.0, 7).is_err());
        assert!(build_grid(1.0, -1.0, 64).is_err());
        assert!(build_grid(f64::NAN, 1.0, 64).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = UniformGrid::covering(-1.0, 3.0, 0.25).unwrap();
        let v: Vec<f64> = g.points().iter().map(|y| 2.0 * y + 1.0).collect();
        assert!((g.integrate(&v) - 12.0).abs() < 1e-12);
    }
}
