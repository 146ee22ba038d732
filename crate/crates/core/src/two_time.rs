//! Prepared data for a two-time experiment: first-measurement eigenbasis
//! coefficients, transition amplitudes ⟨b_j|U|a_i⟩ and Heisenberg matrix
//! elements, shared by the distribution and correlation code.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::linalg::{CMat, C64};
use crate::measurement::{
    dephasing_factor, kraus_unchecked, pointer_grid_for, PointerDistribution,
};
use crate::observable::HermitianObservable;
use crate::propagator::{adjoint_apply, Propagator};
use crate::state::QuantumState;
use crate::truncation::{select_support, TruncationReport};

/// Squared amplitude bound below which a B eigenvector counts as unoccupied.
const OCCUPATION_FLOOR: f64 = 1e-16;

#[derive(Debug)]
pub struct TwoTimeSystem {
    t: f64,
    tau: f64,
    support: Vec<usize>,
    truncation: TruncationReport,
    a_values: Vec<f64>,
    a_groups: Vec<usize>,
    a_spectrum_values: Vec<f64>,
    coefficients: Vec<C64>,
    b_values: Vec<f64>,
    transition: CMat,
    occupied: Vec<usize>,
    heisenberg: OnceLock<CMat>,
    heisenberg_sq: OnceLock<CMat>,
}

impl TwoTimeSystem {
    pub fn prepare(
        state: &QuantumState,
        a: &HermitianObservable,
        b: &HermitianObservable,
        prop: &Propagator,
        tail: f64,
    ) -> Result<Self> {
        a.check_same_basis(prop.hamiltonian())?;
        b.check_same_basis(prop.hamiltonian())?;
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "initial state must be normalized, |ψ|² = {norm}"
            )));
        }
        let a_spec = a.spectrum()?;
        let c_full = a.eigen_coefficients(state)?;
        let (support, truncation) = select_support(&c_full, tail);
        let labels = a_spec.group_labels();
        let transition = transition_amplitudes(a, b, prop, &support)?;
        let coefficients: Vec<C64> = support.iter().map(|&i| c_full[i]).collect();
        let occupied = (0..transition.nrows())
            .filter(|&j| {
                let s: f64 = coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, c)| transition.get(j, i).norm() * c.norm())
                    .sum();
                s * s > OCCUPATION_FLOOR
            })
            .collect();
        Ok(TwoTimeSystem {
            t: state.time(),
            tau: prop.tau(),
            a_values: support.iter().map(|&i| a_spec.values()[i]).collect(),
            a_groups: support.iter().map(|&i| labels[i]).collect(),
            a_spectrum_values: a_spec.values().to_vec(),
            coefficients,
            b_values: b.eigenvalues()?.to_vec(),
            support,
            truncation,
            transition,
            occupied,
            heisenberg: OnceLock::new(),
            heisenberg_sq: OnceLock::new(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn truncation(&self) -> TruncationReport {
        self.truncation
    }

    /// Eigenvalues a_i on the retained support.
    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    /// Degeneracy-group labels of the retained eigenvalues.
    pub fn a_groups(&self) -> &[usize] {
        &self.a_groups
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b_values
    }

    /// ⟨b_j|U|a_i⟩ for all j and retained i.
    pub fn transition(&self) -> &CMat {
        &self.transition
    }

    /// B_{j,i}(τ) on the retained support.
    pub fn heisenberg(&self) -> &CMat {
        self.heisenberg
            .get_or_init(|| heisenberg_from_transition(&self.transition, &self.b_values))
    }

    /// Smallest gap between distinct eigenvalues of A (over the whole spectrum).
    pub fn min_a_gap(&self) -> Option<f64> {
        let v = &self.a_spectrum_values;
        v.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&g| g > 0.0)
            .min_by(f64::total_cmp)
    }

    pub fn mean_a(&self) -> f64 {
        self.a_values
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| a * c.norm_sqr())
            .sum()
    }

    pub fn variance_a(&self) -> f64 {
        let m = self.mean_a();
        self.a_values
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| (a - m).powi(2) * c.norm_sqr())
            .sum()
    }

    /// ⟨B(τ)⟩ after a first measurement of strength `sigma_a` (`None`: no
    /// first measurement).
    pub fn mean_b(&self, sigma_a: Option<f64>) -> f64 {
        self.dephased_trace(self.heisenberg(), sigma_a)
    }

    pub fn variance_b(&self, sigma_a: Option<f64>) -> f64 {
        let sq = self.heisenberg_sq.get_or_init(|| {
            let b2: Vec<f64> = self.b_values.iter().map(|b| b * b).collect();
            heisenberg_from_transition(&self.transition, &b2)
        });
        let m = self.mean_b(sigma_a);
        (self.dephased_trace(sq, sigma_a) - m * m).max(0.0)
    }

    /// Tr(ρ' M) = Σ_{i,k} c_i c_k* ℰ_ik M_ki, with ρ' the state after the first
    /// measurement.
    fn dephased_trace(&self, m: &CMat, sigma_a: Option<f64>) -> f64 {
        let c = &self.coefficients;
        let a = &self.a_values;
        let mut acc = 0.0;
        for i in 0..c.len() {
            for k in 0..c.len() {
                let d = sigma_a.map_or(1.0, |s| dephasing_factor(a[i] - a[k], s));
                acc += d * (c[i] * c[k].conj() * m.get(k, i)).re;
            }
        }
        acc
    }

    /// Eigenvalues of B with non-negligible weight in the evolved state
    /// (for any first-measurement strength).
    pub fn occupied_b_range(&self) -> (f64, f64) {
        let vals = self.occupied.iter().map(|&j| self.b_values[j]);
        let lo = vals.clone().fold(f64::INFINITY, f64::min);
        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn occupied_a_range(&self) -> (f64, f64) {
        let lo = self.a_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .a_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Populations of the occupied B eigenvectors, aligned with `occupied_rows`.
    pub fn b_populations(&self, sigma_a: Option<f64>) -> Vec<f64> {
        let n = self.coefficients.len();
        let w = self.transition.select_rows(&self.occupied);
        match sigma_a {
            None => {
                let amp = w.mul_vec(&self.coefficients);
                amp.iter().map(C64::norm_sqr).collect()
            }
            Some(s) => {
                let rho = CMat::from_fn(n, n, |i, k| {
                    self.coefficients[i]
                        * self.coefficients[k].conj()
                        * dephasing_factor(self.a_values[i] - self.a_values[k], s)
                });
                let m = w.matmul(&rho);
                (0..w.nrows())
                    .map(|j| {
                        (0..n)
                            .map(|k| (m.get(j, k) * w.get(j, k).conj()).re)
                            .sum::<f64>()
                            .max(0.0)
                    })
                    .collect()
            }
        }
    }

    pub fn occupied_rows(&self) -> &[usize] {
        &self.occupied
    }

    /// Pointer grid for the second readout covering the occupied B spectrum.
    pub fn pointer_grid_b(&self, sigma_b: f64) -> Result<UniformGrid> {
        let (lo, hi) = self.occupied_b_range();
        pointer_grid_for(lo, hi, sigma_b)
    }

    pub fn pointer_grid_a(&self, sigma_a: f64) -> Result<UniformGrid> {
        let (lo, hi) = self.occupied_a_range();
        pointer_grid_for(lo, hi, sigma_a)
    }

    /// ∫dy_A P(y_A, y_B) evaluated through the dephased state, exactly
    /// (no y_A quadrature).
    pub fn reduced_distribution(
        &self,
        sigma_a: Option<f64>,
        sigma_b: f64,
        grid: &UniformGrid,
    ) -> PointerDistribution {
        let p = self.b_populations(sigma_a);
        let b: Vec<f64> = self.occupied.iter().map(|&j| self.b_values[j]).collect();
        let density = grid
            .points()
            .iter()
            .map(|&y| {
                b.iter()
                    .zip(&p)
                    .map(|(&bj, &pj)| {
                        let k = kraus_unchecked(y, bj, sigma_b);
                        k * k * pj
                    })
                    .sum()
            })
            .collect();
        PointerDistribution::new(*grid, density, sigma_b)
    }

    /// Unnormalized two-time state amplitudes over all B eigenvectors.
    pub fn two_time_amplitudes(&self, sigma_a: f64, sigma_b: f64, y_a: f64, y_b: f64) -> Vec<C64> {
        let weighted: Vec<C64> = self
            .coefficients
            .iter()
            .zip(&self.a_values)
            .map(|(c, &a)| c * kraus_unchecked(y_a, a, sigma_a))
            .collect();
        let v = self.transition.mul_vec(&weighted);
        v.iter()
            .zip(&self.b_values)
            .map(|(z, &b)| z * kraus_unchecked(y_b, b, sigma_b))
            .collect()
    }
}

/// ⟨b_j|U|a_i⟩ for every eigenvector of B and the given eigenvectors of A.
pub(crate) fn transition_amplitudes(
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
    support: &[usize],
) -> Result<CMat> {
    let y = prop.evolved_eigenvectors(a, support)?;
    Ok(adjoint_apply(b.spectrum()?, &y))
}

/// W† diag(b) W, symmetrized.
pub(crate) fn heisenberg_from_transition(w: &CMat, b_values: &[f64]) -> CMat {
    let b: Vec<C64> = b_values.iter().map(|&x| C64::new(x, 0.0)).collect();
    hermitize(&w.adjoint().matmul(&w.scale_rows(&b)))
}

fn hermitize(m: &CMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        0.5 * (m.get(i, j) + m.get(j, i).conj())
    })
}
