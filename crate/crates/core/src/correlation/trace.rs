use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::measurement::{dephasing_factor, kraus_amplitude};
use crate::observable::HermitianObservable;
use crate::propagator::overlap;
use crate::state::QuantumState;
use crate::truncation::{select_support, TruncationReport};

use super::{residue, CorrelationResult, Method};

/// Energy levels whose weight bound q_n² = (Σ_i |⟨n|a_i⟩||c_i|)² falls below
/// this are dropped from the trace.
const ENERGY_FLOOR: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    Projective,
    Finite(f64),
    IdeallyWeak,
}

/// Evaluates the closed-form correlator on many τ at once in the energy
/// eigenbasis of H:
/// S(τ) = Σ_{n,m} e^{iE_nτ} B_nm G_mn e^{-iE_mτ}, G = P K P†,
/// where P_mi = ⟨m|a_i⟩ and K_ij = w_ij c_j* D_ij c_i.
#[derive(Debug)]
pub struct TraceEngine {
    t: f64,
    truncation: TruncationReport,
    a_values: Vec<f64>,
    a_groups: Vec<usize>,
    coefficients: Vec<C64>,
    energies: Vec<f64>,
    p: CMat,
    b_energy: CMat,
}

impl TraceEngine {
    pub fn new(
        state: &QuantumState,
        a: &HermitianObservable,
        b: &HermitianObservable,
        h: &HermitianObservable,
        tail: f64,
    ) -> Result<Self> {
        a.check_same_basis(h)?;
        b.check_same_basis(h)?;
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "initial state must be normalized, |ψ|² = {norm}"
            )));
        }
        let a_spec = a.spectrum()?;
        let h_spec = h.spectrum()?;
        let c_full = a.eigen_coefficients(state)?;
        let (support, truncation) = select_support(&c_full, tail);
        let coefficients: Vec<C64> = support.iter().map(|&i| c_full[i]).collect();
        let p_full = overlap(h_spec, a_spec, &support);
        let kept: Vec<usize> = (0..p_full.nrows())
            .filter(|&n| {
                let q: f64 = coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, c)| p_full.get(n, i).norm() * c.norm())
                    .sum();
                q * q > ENERGY_FLOOR
            })
            .collect();
        let p = p_full.select_rows(&kept);
        let vk = h_spec.columns(&kept);
        let b_energy = vk.adjoint().matmul(&b.apply_matrix(&vk));
        let e_all = h_spec.values();
        let e_min = kept.iter().map(|&n| e_all[n]).fold(f64::INFINITY, f64::min);
        let labels = a_spec.group_labels();
        Ok(TraceEngine {
            t: state.time(),
            truncation,
            a_values: support.iter().map(|&i| a_spec.values()[i]).collect(),
            a_groups: support.iter().map(|&i| labels[i]).collect(),
            coefficients,
            energies: kept.iter().map(|&n| e_all[n] - e_min).collect(),
            p,
            b_energy,
        })
    }

    /// Number of energy levels retained.
    pub fn energy_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn truncation(&self) -> TruncationReport {
        self.truncation
    }

    pub fn trace(&self, coupling: Coupling, taus: &[f64]) -> Result<Vec<CorrelationResult>> {
        if let Coupling::Finite(s) = coupling {
            kraus_amplitude(0.0, 0.0, s)?;
        }
        if let Some(bad) = taus.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("tau must be finite, got {bad}")));
        }
        let (a, g, c) = (&self.a_values, &self.a_groups, &self.coefficients);
        let damping = |i: usize, j: usize| match coupling {
            Coupling::Projective => {
                if g[i] == g[j] {
                    1.0
                } else {
                    0.0
                }
            }
            Coupling::Finite(s) => dephasing_factor(a[i] - a[j], s),
            Coupling::IdeallyWeak => 1.0,
        };
        let s = a.len();
        let k = CMat::from_fn(s, s, |i, j| {
            0.5 * (a[i] + a[j]) * (c[j].conj() * damping(i, j) * c[i])
        });
        let gm = self.p.matmul(&k).matmul(&self.p.adjoint());
        let m = self.b_energy.hadamard(&gm.transpose());
        let scale: f64 = (0..m.nrows())
            .flat_map(|n| (0..m.ncols()).map(move |l| (n, l)))
            .map(|(n, l)| m.get(n, l).norm())
            .sum();
        let phi = CMat::from_fn(self.energies.len(), taus.len(), |n, kt| {
            C64::from_polar(1.0, -self.energies[n] * taus[kt])
        });
        let y = m.matmul(&phi);
        let (sigma_a, method) = match coupling {
            Coupling::Projective => (None, Method::ProjectiveLimit),
            Coupling::Finite(s) => (Some(s), Method::ClosedForm),
            Coupling::IdeallyWeak => (None, Method::IwmLimit),
        };
        Ok(taus
            .iter()
            .enumerate()
            .map(|(kt, &tau)| {
                let sum: C64 = (0..phi.nrows())
                    .map(|n| phi.get(n, kt).conj() * y.get(n, kt))
                    .sum();
                CorrelationResult {
                    value: sum.re,
                    imag_residue: residue(sum, scale),
                    sigma_a,
                    sigma_b: None,
                    t: self.t,
                    tau,
                    method,
                    truncation: self.truncation,
                }
            })
            .collect())
    }
}
