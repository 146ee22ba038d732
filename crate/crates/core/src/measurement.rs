//! Gaussian Kraus family `Ω_{y-a} = (2πσ²)^{-1/4} exp[-(y-a)²/4σ²]` (λ = 1)
//! and the one- and two-measurement outcome statistics it generates.

use std::fmt::Write as _;

use faer::Mat;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::grid::UniformGrid;
use crate::linalg::{gemm, CMat};
use crate::observable::HermitianObservable;
use crate::propagator::Propagator;
use crate::state::QuantumState;
use crate::truncation::{select_support, DISTRIBUTION_TAIL};
use crate::two_time::TwoTimeSystem;

/// Pointer grid spacing is σ divided by this.
pub const POINTS_PER_SIGMA: f64 = 16.0;
/// Pointer grid extends this many σ beyond the occupied spectrum.
pub const RANGE_IN_SIGMAS: f64 = 8.0;
pub const MAX_POINTER_POINTS: usize = 1_000_000;
pub const MAX_JOINT_POINTS: usize = 20_000_000;

pub fn kraus_amplitude(y: f64, a: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(kraus_unchecked(y, a, sigma))
}

#[inline]
pub(crate) fn kraus_unchecked(y: f64, a: f64, sigma: f64) -> f64 {
    let d = y - a;
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25)
        * (-d * d / (4.0 * sigma * sigma)).exp()
}

/// ∫Ω_{y-a}Ω_{y-a'}dy = exp[-(a-a')²/8σ²].
#[inline]
pub fn dephasing_factor(delta_a: f64, sigma: f64) -> f64 {
    (-delta_a * delta_a / (8.0 * sigma * sigma)).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "coupling σ must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

pub(crate) fn pointer_grid_for(lo: f64, hi: f64, sigma: f64) -> Result<UniformGrid> {
    check_sigma(sigma)?;
    let step = sigma / POINTS_PER_SIGMA;
    let (lo, hi) = (lo - RANGE_IN_SIGMAS * sigma, hi + RANGE_IN_SIGMAS * sigma);
    let n = ((hi - lo) / step).ceil() + 1.0;
    if n > MAX_POINTER_POINTS as f64 {
        return Err(Error::regime(format!(
            "pointer grid would need {n:.0} points (σ = {sigma:.3e} against an occupied width of {:.3e}); \
             increase σ or reduce the occupied spectrum",
            hi - lo
        )));
    }
    UniformGrid::covering(lo, hi, step)
}

#[derive(Clone, Debug)]
pub struct MeasurementModel {
    observable: HermitianObservable,
    sigma: f64,
    pointer_grid: Option<UniformGrid>,
}

impl MeasurementModel {
    pub fn new(observable: &HermitianObservable, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        observable.spectrum()?;
        Ok(MeasurementModel {
            observable: observable.clone(),
            sigma,
            pointer_grid: None,
        })
    }

    /// Uses a fixed readout grid instead of one sized to the occupied spectrum.
    pub fn with_pointer_grid(mut self, grid: UniformGrid) -> Self {
        self.pointer_grid = Some(grid);
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        1.0
    }

    pub fn observable(&self) -> &HermitianObservable {
        &self.observable
    }

    pub fn kraus(&self, y: f64, a: f64) -> f64 {
        kraus_unchecked(y, a, self.sigma)
    }

    /// Readout grid spanning `[lo - 8σ, hi + 8σ]`.
    pub fn pointer_grid(&self, lo: f64, hi: f64) -> Result<UniformGrid> {
        match self.pointer_grid {
            None => pointer_grid_for(lo, hi, self.sigma),
            Some(g) => {
                let need_lo = lo - RANGE_IN_SIGMAS * self.sigma;
                let need_hi = hi + RANGE_IN_SIGMAS * self.sigma;
                let slack = 1e-9 * (need_hi - need_lo);
                if g.start > need_lo + slack || g.end() < need_hi - slack {
                    return Err(Error::regime(format!(
                        "pointer grid [{}, {}] does not cover the occupied spectrum ± 8σ = [{need_lo}, {need_hi}]",
                        g.start,
                        g.end()
                    )));
                }
                Ok(g)
            }
        }
    }

    /// ∫|Ω_{y-a}|² dy on the model's grid around `a`.
    pub fn completeness(&self, a: f64) -> Result<f64> {
        let g = self.pointer_grid(a, a)?;
        let v: Vec<f64> = g
            .points()
            .iter()
            .map(|&y| self.kraus(y, a).powi(2))
            .collect();
        Ok(g.integrate(&v))
    }

    /// ∫ y |Ω_{y-a}|² dy on the model's grid around `a`.
    pub fn calibration(&self, a: f64) -> Result<f64> {
        let g = self.pointer_grid(a, a)?;
        let v: Vec<f64> = g
            .points()
            .iter()
            .map(|&y| y * self.kraus(y, a).powi(2))
            .collect();
        Ok(g.integrate(&v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointerDistribution {
    pub grid: UniformGrid,
    pub density: Vec<f64>,
    pub sigma: f64,
}

impl PointerDistribution {
    pub fn new(grid: UniformGrid, density: Vec<f64>, sigma: f64) -> Self {
        assert_eq!(grid.len, density.len());
        PointerDistribution {
            grid,
            density,
            sigma,
        }
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn normalization(&self) -> f64 {
        self.grid.integrate(&self.density)
    }

    pub fn mean(&self) -> f64 {
        let v: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&self.density)
            .map(|(y, p)| y * p)
            .collect();
        self.grid.integrate(&v)
    }

    /// ∫|P - Q| dy on a shared grid.
    pub fn l1_distance(&self, other: &PointerDistribution) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid(
                "L1 distance needs distributions on the same pointer grid",
            ));
        }
        let d: Vec<f64> = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(p, q)| (p - q).abs())
            .collect();
        Ok(self.grid.integrate(&d))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,density\n");
        for (y, p) in self.grid.points().iter().zip(&self.density) {
            let _ = writeln!(s, "{},{}", fmt_f64(*y), fmt_f64(*p));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub y_a: UniformGrid,
    pub y_b: UniformGrid,
    /// Row-major over (y_A, y_B).
    pub density: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub t: f64,
    pub tau: f64,
}

impl JointDistribution {
    pub fn get(&self, ia: usize, ib: usize) -> f64 {
        self.density[ia * self.y_b.len + ib]
    }

    pub fn normalization(&self) -> f64 {
        self.marginal_a().normalization()
    }

    /// ∫dy_B P(y_A, y_B).
    pub fn marginal_a(&self) -> PointerDistribution {
        let nb = self.y_b.len;
        let density = self
            .density
            .chunks(nb)
            .map(|row| self.y_b.integrate(row))
            .collect();
        PointerDistribution::new(self.y_a, density, self.sigma_a)
    }

    /// ∫dy_A P(y_A, y_B).
    pub fn marginal_b(&self) -> PointerDistribution {
        let wa = self.y_a.weights();
        let nb = self.y_b.len;
        let mut density = vec![0.0; nb];
        for (row, w) in self.density.chunks(nb).zip(&wa) {
            for (d, p) in density.iter_mut().zip(row) {
                *d += w * p;
            }
        }
        PointerDistribution::new(self.y_b, density, self.sigma_b)
    }

    /// ∫∫ y_A y_B P dy_A dy_B.
    pub fn correlation(&self) -> f64 {
        let ya = self.y_a.points();
        let yb = self.y_b.points();
        let wa = self.y_a.weights();
        let wb = self.y_b.weights();
        let nb = self.y_b.len;
        self.density
            .chunks(nb)
            .enumerate()
            .map(|(i, row)| {
                let inner: f64 = row
                    .iter()
                    .zip(&yb)
                    .zip(&wb)
                    .map(|((p, y), w)| p * y * w)
                    .sum();
                wa[i] * ya[i] * inner
            })
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("y_A,y_B,density\n");
        let yb = self.y_b.points();
        for (i, ya) in self.y_a.points().iter().enumerate() {
            for (j, y) in yb.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    fmt_f64(*ya),
                    fmt_f64(*y),
                    fmt_f64(self.get(i, j))
                );
            }
        }
        s
    }
}

/// `|ψ_A⟩ = Σ_i Ω_{y_A - a_i} c_i |a_i⟩`, left unnormalized; returned in A's eigenbasis.
pub fn post_measurement_state(
    state: &QuantumState,
    model: &MeasurementModel,
    y_a: f64,
) -> Result<QuantumState> {
    let a = model.observable();
    let c = a.eigen_coefficients(state)?;
    let vals = a.eigenvalues()?;
    let out = c
        .iter()
        .zip(vals)
        .map(|(c, &ai)| c * model.kraus(y_a, ai))
        .collect();
    QuantumState::from_coordinates(out, a.eigenbasis(), state.time())
}

pub fn pointer_distribution(
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<PointerDistribution> {
    let a = model.observable();
    let c = a.eigen_coefficients(state)?;
    let (support, _) = select_support(&c, DISTRIBUTION_TAIL);
    let vals = a.eigenvalues()?;
    let occ: Vec<(f64, f64)> = support
        .iter()
        .map(|&i| (vals[i], c[i].norm_sqr()))
        .collect();
    let lo = occ.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
    let hi = occ.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let grid = model.pointer_grid(lo, hi)?;
    let density = grid
        .points()
        .iter()
        .map(|&y| {
            occ.iter()
                .map(|&(ai, p)| model.kraus(y, ai).powi(2) * p)
                .sum()
        })
        .collect();
    Ok(PointerDistribution::new(grid, density, model.sigma()))
}

fn prepare(
    state: &QuantumState,
    model_a: &MeasurementModel,
    prop: &Propagator,
    model_b: &MeasurementModel,
) -> Result<TwoTimeSystem> {
    TwoTimeSystem::prepare(
        state,
        model_a.observable(),
        model_b.observable(),
        prop,
        DISTRIBUTION_TAIL,
    )
}

/// `|ψ_{A,B}⟩ = Σ_{i,j} Ω_{y_A-a_i} Ω_{y_B-b_j} c_i c_{j,i} |b_j⟩`, unnormalized, in B's eigenbasis.
pub fn two_time_state(
    state: &QuantumState,
    model_a: &MeasurementModel,
    prop: &Propagator,
    model_b: &MeasurementModel,
    y_a: f64,
    y_b: f64,
) -> Result<QuantumState> {
    let sys = prepare(state, model_a, prop, model_b)?;
    let amp = sys.two_time_amplitudes(model_a.sigma(), model_b.sigma(), y_a, y_b);
    QuantumState::from_coordinates(
        amp,
        model_b.observable().eigenbasis(),
        state.time() + prop.tau(),
    )
}

pub fn joint_distribution(
    state: &QuantumState,
    model_a: &MeasurementModel,
    prop: &Propagator,
    model_b: &MeasurementModel,
) -> Result<JointDistribution> {
    let sys = prepare(state, model_a, prop, model_b)?;
    let (alo, ahi) = sys.occupied_a_range();
    let (blo, bhi) = sys.occupied_b_range();
    let ga = model_a.pointer_grid(alo, ahi)?;
    let gb = model_b.pointer_grid(blo, bhi)?;
    joint_on_grids(&sys, model_a.sigma(), model_b.sigma(), ga, gb)
}

pub(crate) fn joint_on_grids(
    sys: &TwoTimeSystem,
    sigma_a: f64,
    sigma_b: f64,
    ga: UniformGrid,
    gb: UniformGrid,
) -> Result<JointDistribution> {
    if ga.len.saturating_mul(gb.len) > MAX_JOINT_POINTS {
        return Err(Error::regime(format!(
            "joint pointer grid {}×{} exceeds {MAX_JOINT_POINTS} points; use the reduced-distribution route \
             or a smaller σ range",
            ga.len, gb.len
        )));
    }
    let rows = sys.occupied_rows();
    let c = sys.coefficients();
    let w = sys.transition().select_rows(rows).scale_cols(c);
    let ya = ga.points();
    let ka = CMat::from_real(Mat::from_fn(c.len(), ga.len, |i, k| {
        kraus_unchecked(ya[k], sys.a_values()[i], sigma_a)
    }));
    // V[j, k] = Σ_i W_ji c_i Ω_A(y_k - a_i)
    let v = w.matmul(&ka);
    let vsq = Mat::from_fn(ga.len, rows.len(), |k, j| v.get(j, k).norm_sqr());
    let yb = gb.points();
    let kb = Mat::from_fn(rows.len(), gb.len, |j, l| {
        kraus_unchecked(yb[l], sys.b_values()[rows[j]], sigma_b).powi(2)
    });
    let p = gemm(vsq.as_ref(), kb.as_ref());
    let mut density = Vec::with_capacity(ga.len * gb.len);
    for i in 0..ga.len {
        density.extend((0..gb.len).map(|l| p[(i, l)].max(0.0)));
    }
    Ok(JointDistribution {
        y_a: ga,
        y_b: gb,
        density,
        sigma_a,
        sigma_b,
        t: sys.t(),
        tau: sys.tau(),
    })
}

pub fn reduced_distribution(joint: &JointDistribution) -> PointerDistribution {
    joint.marginal_b()
}

/// P(y_B) with no first measurement.
pub fn unmeasured_distribution(
    state: &QuantumState,
    a: &HermitianObservable,
    prop: &Propagator,
    model_b: &MeasurementModel,
) -> Result<PointerDistribution> {
    let sys = TwoTimeSystem::prepare(state, a, model_b.observable(), prop, DISTRIBUTION_TAIL)?;
    let (lo, hi) = sys.occupied_b_range();
    let grid = model_b.pointer_grid(lo, hi)?;
    Ok(sys.reduced_distribution(None, model_b.sigma(), &grid))
}
