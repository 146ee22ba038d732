use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::observable::{Eigenvectors, HermitianObservable, Spectrum};
use crate::state::{Basis, QuantumState};

/// States evolve with `exp(-iHτ)` and operators as `B(τ) = U†BU`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    SchrodingerMinus,
}

#[derive(Clone, Debug)]
pub struct Propagator {
    hamiltonian: HermitianObservable,
    tau: f64,
    sign: SignConvention,
}

impl Propagator {
    pub fn new(hamiltonian: &HermitianObservable, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::invalid(format!("tau must be finite, got {tau}")));
        }
        hamiltonian.spectrum()?;
        Ok(Propagator {
            hamiltonian: hamiltonian.clone(),
            tau,
            sign: SignConvention::SchrodingerMinus,
        })
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Propagator::new(&self.hamiltonian, tau)
    }

    pub fn hamiltonian(&self) -> &HermitianObservable {
        &self.hamiltonian
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.sign
    }

    fn spectrum(&self) -> &Spectrum {
        self.hamiltonian.spectrum().expect("checked in constructor")
    }

    pub fn energies(&self) -> &[f64] {
        self.spectrum().values()
    }

    /// exp(-i E_n τ).
    pub fn phases(&self) -> Vec<C64> {
        self.energies()
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * self.tau))
            .collect()
    }

    /// U applied to a matrix of coordinate columns in the Hamiltonian's basis.
    pub fn apply_matrix(&self, x: &CMat) -> CMat {
        let sp = self.spectrum();
        let energy = adjoint_apply(sp, x).scale_rows(&self.phases());
        eigen_apply(sp, &energy)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let sp = self.spectrum();
        let c: Vec<C64> = sp
            .to_eigen(v)
            .iter()
            .zip(self.phases())
            .map(|(a, p)| a * p)
            .collect();
        sp.from_eigen(&c)
    }

    pub fn matrix(&self) -> CMat {
        self.apply_matrix(&CMat::identity(self.hamiltonian.dim()))
    }

    pub fn unitarity_defect(&self) -> f64 {
        let u = self.matrix();
        u.adjoint()
            .matmul(&u)
            .max_abs_diff(&CMat::identity(u.nrows()))
    }

    /// Columns `U |a_i⟩` for `i` in `cols`, in the Hamiltonian's basis.
    pub fn evolved_eigenvectors(&self, a: &HermitianObservable, cols: &[usize]) -> Result<CMat> {
        a.check_same_basis(&self.hamiltonian)?;
        let r = overlap(self.spectrum(), a.spectrum()?, cols).scale_rows(&self.phases());
        Ok(eigen_apply(self.spectrum(), &r))
    }
}

/// V† X.
pub(crate) fn adjoint_apply(sp: &Spectrum, x: &CMat) -> CMat {
    match sp.vectors() {
        Eigenvectors::Permutation(p) => x.select_rows(p),
        Eigenvectors::Dense(v) => v.adjoint().matmul(x),
    }
}

/// V X.
pub(crate) fn eigen_apply(sp: &Spectrum, x: &CMat) -> CMat {
    match sp.vectors() {
        Eigenvectors::Permutation(p) => {
            let mut inv = vec![0; p.len()];
            for (k, &i) in p.iter().enumerate() {
                inv[i] = k;
            }
            x.select_rows(&inv)
        }
        Eigenvectors::Dense(v) => v.matmul(x),
    }
}

/// ⟨u_n|v_k⟩ for all eigenvectors u of `lhs` and the selected eigenvectors v of `rhs`.
pub(crate) fn overlap(lhs: &Spectrum, rhs: &Spectrum, cols: &[usize]) -> CMat {
    match (lhs.vectors(), rhs.vectors()) {
        (Eigenvectors::Dense(u), Eigenvectors::Permutation(p)) => {
            let rows: Vec<usize> = cols.iter().map(|&k| p[k]).collect();
            u.select_rows(&rows).adjoint()
        }
        _ => adjoint_apply(lhs, &rhs.columns(cols)),
    }
}

pub fn evolve(state: &QuantumState, prop: &Propagator) -> Result<QuantumState> {
    let h = prop.hamiltonian();
    if let Basis::Eigen { observable, .. } = state.basis() {
        if observable == h.name() {
            let c: Vec<C64> = state
                .coordinates()
                .iter()
                .zip(prop.phases())
                .map(|(a, p)| a * p)
                .collect();
            return QuantumState::from_coordinates(
                c,
                state.basis().clone(),
                state.time() + prop.tau(),
            );
        }
    }
    if state.basis() != h.basis() {
        return Err(Error::BasisMismatch(format!(
            "state is in {}, Hamiltonian is in {}",
            state.basis().describe(),
            h.basis().describe()
        )));
    }
    let out = prop.apply(&state.coordinates());
    QuantumState::from_coordinates(out, state.basis().clone(), state.time() + prop.tau())
}

/// B_{j,i}(τ) = ⟨a_j|U† B U|a_i⟩ over the full eigenbasis of `basis_of`.
pub fn heisenberg_matrix_elements(
    b: &HermitianObservable,
    prop: &Propagator,
    basis_of: &HermitianObservable,
) -> Result<CMat> {
    let all: Vec<usize> = (0..basis_of.dim()).collect();
    heisenberg_block(b, prop, basis_of, &all)
}

/// Restriction of the Heisenberg matrix to eigenvectors `support` of `a`.
pub fn heisenberg_block(
    b: &HermitianObservable,
    prop: &Propagator,
    a: &HermitianObservable,
    support: &[usize],
) -> Result<CMat> {
    b.check_same_basis(prop.hamiltonian())?;
    let q = prop.evolved_eigenvectors(a, support)?;
    Ok(q.adjoint().matmul(&b.apply_matrix(&q)))
}
