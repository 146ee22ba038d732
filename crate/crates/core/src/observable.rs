use std::ops::Range;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::state::{Basis, QuantumState};

/// Largest tolerated max |M - M^H| for an operator to count as Hermitian.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Relative spread below which eigenvalues are grouped as degenerate.
pub const DEGENERACY_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum Operator {
    Diagonal(Vec<f64>),
    Dense(CMat),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug)]
pub enum Eigenvectors {
    /// Eigenvector `k` is the basis vector `e_{perm[k]}`.
    Permutation(Vec<usize>),
    Dense(CMat),
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Eigenvectors,
    parity: Option<Vec<Parity>>,
    degeneracy_tolerance: f64,
}

impl Spectrum {
    fn new(values: Vec<f64>, vectors: Eigenvectors, parity: Option<Vec<Parity>>) -> Self {
        let width = spectral_width(&values);
        Spectrum {
            values,
            vectors,
            parity,
            degeneracy_tolerance: DEGENERACY_RELATIVE_TOLERANCE * width,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Eigenvectors {
        &self.vectors
    }

    pub fn parity(&self) -> Option<&[Parity]> {
        self.parity.as_deref()
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.degeneracy_tolerance
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> f64 {
        spectral_width(&self.values)
    }

    /// Index ranges of (near-)degenerate eigenvalue groups, ascending.
    pub fn groups(&self) -> Vec<Range<usize>> {
        degenerate_groups(&self.values, self.degeneracy_tolerance)
    }

    /// Group label of every eigenvalue index.
    pub fn group_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.values.len()];
        for (g, r) in self.groups().into_iter().enumerate() {
            labels[r].iter_mut().for_each(|l| *l = g);
        }
        labels
    }

    /// Dense eigenvector matrix restricted to the given columns.
    pub fn columns(&self, idx: &[usize]) -> CMat {
        match &self.vectors {
            Eigenvectors::Dense(v) => v.select_cols(idx),
            Eigenvectors::Permutation(p) => {
                let n = p.len();
                CMat::from_real(Mat::from_fn(n, idx.len(), |i, j| {
                    if p[idx[j]] == i {
                        1.0
                    } else {
                        0.0
                    }
                }))
            }
        }
    }

    pub fn matrix(&self) -> CMat {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.columns(&all)
    }

    /// Eigenbasis coefficients V† v.
    pub fn to_eigen(&self, v: &[C64]) -> Vec<C64> {
        match &self.vectors {
            Eigenvectors::Permutation(p) => p.iter().map(|&i| v[i]).collect(),
            Eigenvectors::Dense(m) => (0..m.ncols())
                .map(|k| (0..m.nrows()).map(|i| m.get(i, k).conj() * v[i]).sum())
                .collect(),
        }
    }

    /// Basis vector V c.
    pub fn from_eigen(&self, c: &[C64]) -> Vec<C64> {
        match &self.vectors {
            Eigenvectors::Permutation(p) => {
                let mut v = vec![C64::new(0.0, 0.0); p.len()];
                for (k, &i) in p.iter().enumerate() {
                    v[i] = c[k];
                }
                v
            }
            Eigenvectors::Dense(m) => m.mul_vec(c),
        }
    }

    /// max |V†V - I|.
    pub fn unitarity_defect(&self) -> f64 {
        match &self.vectors {
            Eigenvectors::Permutation(_) => 0.0,
            Eigenvectors::Dense(v) => v
                .adjoint()
                .matmul(v)
                .max_abs_diff(&CMat::identity(v.ncols())),
        }
    }
}

fn spectral_width(values: &[f64]) -> f64 {
    match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    }
}

pub(crate) fn degenerate_groups(sorted: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] > tol {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Hermitian operator in a declared basis, with an optional cached spectral
/// decomposition. Clones share storage.
#[derive(Clone, Debug)]
pub struct HermitianObservable {
    name: String,
    basis: Basis,
    operator: Arc<Operator>,
    spectrum: Option<Arc<Spectrum>>,
}

impl HermitianObservable {
    pub fn diagonal(name: impl Into<String>, values: Vec<f64>, basis: Basis) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observable entries must be finite"));
        }
        Ok(HermitianObservable {
            name: name.into(),
            basis,
            operator: Arc::new(Operator::Diagonal(values)),
            spectrum: None,
        })
    }

    pub fn dense(name: impl Into<String>, matrix: CMat, basis: Basis) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let defect = matrix.hermiticity_defect();
        if !(defect < HERMITICITY_TOLERANCE) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(HermitianObservable {
            name: name.into(),
            basis,
            operator: Arc::new(Operator::Dense(matrix)),
            spectrum: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_diagonalized(&self) -> bool {
        self.spectrum.is_some()
    }

    pub fn spectrum(&self) -> Result<&Spectrum> {
        self.spectrum
            .as_deref()
            .ok_or_else(|| Error::NotDiagonalized(self.name.clone()))
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(self.spectrum()?.values())
    }

    pub fn to_dense(&self) -> CMat {
        match &*self.operator {
            Operator::Diagonal(d) => {
                let n = d.len();
                CMat::from_real(Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
            }
            Operator::Dense(m) => m.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &*self.operator {
            Operator::Diagonal(d) => d.iter().fold(0.0, |m, v| m.max(v.abs())),
            Operator::Dense(m) => m.max_abs(),
        }
    }

    /// M v for an orthonormal-coordinate vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match &*self.operator {
            Operator::Diagonal(d) => d.iter().zip(v).map(|(a, z)| z * a).collect(),
            Operator::Dense(m) => m.mul_vec(v),
        }
    }

    /// M X for a matrix of coordinate columns.
    pub fn apply_matrix(&self, x: &CMat) -> CMat {
        match &*self.operator {
            Operator::Diagonal(d) => {
                x.scale_rows(&d.iter().map(|&a| C64::new(a, 0.0)).collect::<Vec<_>>())
            }
            Operator::Dense(m) => m.matmul(x),
        }
    }

    /// Matrix elements ⟨v_k|M|v_l⟩ between eigenvectors of `other`.
    pub fn in_eigenbasis_of(&self, other: &HermitianObservable) -> Result<CMat> {
        self.check_same_basis(other)?;
        let v = other.spectrum()?.matrix();
        Ok(v.adjoint().matmul(&self.apply_matrix(&v)))
    }

    pub(crate) fn check_same_basis(&self, other: &HermitianObservable) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!(
                "{} is in {}, {} is in {}",
                self.name,
                self.basis.describe(),
                other.name,
                other.basis.describe()
            )));
        }
        Ok(())
    }

    /// Orthonormal coordinates of `state` in this observable's basis.
    pub fn coordinates_of(&self, state: &QuantumState) -> Result<Vec<C64>> {
        if state.basis() == &self.basis {
            return Ok(state.coordinates());
        }
        if let Basis::Eigen { observable, dim } = state.basis() {
            if observable == &self.name && *dim == self.dim() {
                return Ok(self.spectrum()?.from_eigen(&state.coordinates()));
            }
        }
        Err(Error::BasisMismatch(format!(
            "state is in {}, observable {} is in {}",
            state.basis().describe(),
            self.name,
            self.basis.describe()
        )))
    }

    /// Coefficients c_i = ⟨a_i|ψ⟩.
    pub fn eigen_coefficients(&self, state: &QuantumState) -> Result<Vec<C64>> {
        if let Basis::Eigen { observable, dim } = state.basis() {
            if observable == &self.name && *dim == self.dim() {
                return Ok(state.coordinates());
            }
        }
        let coords = self.coordinates_of(state)?;
        Ok(self.spectrum()?.to_eigen(&coords))
    }

    pub fn eigenbasis(&self) -> Basis {
        Basis::Eigen {
            observable: self.name.clone(),
            dim: self.dim(),
        }
    }

    /// ⟨ψ|M|ψ⟩ for a unit state.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let v = self.coordinates_of(state)?;
        let mv = self.apply(&v);
        Ok(v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// Eigenstate `k` expressed in this observable's basis.
    pub fn eigenstate(&self, k: usize, time: f64) -> Result<QuantumState> {
        let sp = self.spectrum()?;
        if k >= sp.dim() {
            return Err(Error::invalid(format!(
                "eigenstate index {k} out of range ({})",
                sp.dim()
            )));
        }
        let mut e = vec![C64::new(0.0, 0.0); sp.dim()];
        e[k] = C64::new(1.0, 0.0);
        QuantumState::from_coordinates(sp.from_eigen(&e), self.basis.clone(), time)
    }
}

/// Fills the spectral cache. Real operators that are symmetric under index
/// reversal are split into even and odd blocks first, which halves the cost
/// and gives eigenvectors of definite parity.
pub fn diagonalize(obs: &HermitianObservable) -> Result<HermitianObservable> {
    if obs.spectrum.is_some() {
        return Ok(obs.clone());
    }
    let spectrum = match &*obs.operator {
        Operator::Diagonal(d) => {
            let mut perm: Vec<usize> = (0..d.len()).collect();
            perm.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
            let values = perm.iter().map(|&i| d[i]).collect();
            Spectrum::new(values, Eigenvectors::Permutation(perm), None)
        }
        Operator::Dense(m) => {
            let defect = m.hermiticity_defect();
            if !(defect < HERMITICITY_TOLERANCE) {
                return Err(Error::NotHermitian(defect));
            }
            if m.is_real() && m.nrows() >= 2 && is_mirror_symmetric(m) {
                parity_adapted_eigen(m)?
            } else {
                let (values, vectors) = m.self_adjoint_eigen()?;
                Spectrum::new(values, Eigenvectors::Dense(vectors), None)
            }
        }
    };
    Ok(HermitianObservable {
        spectrum: Some(Arc::new(spectrum)),
        ..obs.clone()
    })
}

fn is_mirror_symmetric(m: &CMat) -> bool {
    let n = m.nrows();
    let re = m.re();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for j in 0..n {
        for i in 0..n {
            if (re[(i, j)] - re[(n - 1 - i, n - 1 - j)]).abs() > 1e-14 * scale {
                return false;
            }
        }
    }
    true
}

fn parity_adapted_eigen(m: &CMat) -> Result<Spectrum> {
    let n = m.nrows();
    let h = m.re();
    let p = n / 2;
    let centre = (n % 2 == 1).then_some(p);
    let mirror = |i: usize| n - 1 - i;
    let s2 = std::f64::consts::SQRT_2;

    let ne = p + centre.map_or(0, |_| 1);
    let even = Mat::from_fn(ne, ne, |i, j| match (i < p, j < p) {
        (true, true) => h[(i, j)] + h[(i, mirror(j))],
        (true, false) => s2 * h[(i, p)],
        (false, true) => s2 * h[(p, j)],
        (false, false) => h[(p, p)],
    });
    let odd = Mat::from_fn(p, p, |i, j| h[(i, j)] - h[(i, mirror(j))]);

    let (ve, ue) = CMat::from_real(even).self_adjoint_eigen()?;
    let (vo, uo) = CMat::from_real(odd).self_adjoint_eigen()?;

    let mut order: Vec<(f64, Parity, usize)> = ve
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, Parity::Even, k))
        .chain(vo.iter().enumerate().map(|(k, &v)| (v, Parity::Odd, k)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = order.iter().map(|o| o.0).collect();
    let tol = DEGENERACY_RELATIVE_TOLERANCE * spectral_width(&values);
    for g in degenerate_groups(&values, tol) {
        order[g].sort_by_key(|o| o.1 == Parity::Odd);
    }

    let inv = 1.0 / s2;
    let mut vecs = Mat::<f64>::zeros(n, n);
    for (col, &(_, parity, k)) in order.iter().enumerate() {
        match parity {
            Parity::Even => {
                let u = ue.re();
                for i in 0..p {
                    let x = u[(i, k)] * inv;
                    vecs[(i, col)] = x;
                    vecs[(mirror(i), col)] = x;
                }
                if let Some(c) = centre {
                    vecs[(c, col)] = u[(p, k)];
                }
            }
            Parity::Odd => {
                let u = uo.re();
                for i in 0..p {
                    let x = u[(i, k)] * inv;
                    vecs[(i, col)] = x;
                    vecs[(mirror(i), col)] = -x;
                }
            }
        }
    }
    let values = order.iter().map(|o| o.0).collect();
    let parity = order.iter().map(|o| o.1).collect();
    Ok(Spectrum::new(
        values,
        Eigenvectors::Dense(CMat::from_real(vecs)),
        Some(parity),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn reconstruction_error(obs: &HermitianObservable) -> f64 {
        let sp = obs.spectrum().unwrap();
        let v = sp.matrix();
        let d: Vec<C64> = sp.values().iter().map(|&x| c(x)).collect();
        v.scale_cols(&d)
            .matmul(&v.adjoint())
            .max_abs_diff(&obs.to_dense())
    }

    #[test]
    fn pauli_z_sorted() {
        let z =
            HermitianObservable::diagonal("Z", vec![1.0, -1.0], Basis::Computational(2)).unwrap();
        let z = diagonalize(&z).unwrap();
        assert_eq!(z.eigenvalues().unwrap(), &[-1.0, 1.0]);
        assert!(reconstruction_error(&z) < 1e-15);
    }

    #[test]
    fn pauli_x_eigenvectors() {
        let m = CMat::from_rows(&[vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]]).unwrap();
        let x = diagonalize(&HermitianObservable::dense("X", m, Basis::Computational(2)).unwrap())
            .unwrap();
        let sp = x.spectrum().unwrap();
        assert!((sp.values()[0] + 1.0).abs() < 1e-15 && (sp.values()[1] - 1.0).abs() < 1e-15);
        let v = sp.matrix();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // columns (1, -1)/√2 and (1, 1)/√2 up to sign
        assert!((v.get(0, 0).re.abs() - r).abs() < 1e-14);
        assert!((v.get(0, 0).re + v.get(1, 0).re).abs() < 1e-14);
        assert!((v.get(0, 1).re - v.get(1, 1).re).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_rows(&[vec![c(0.0), c(1.0)], vec![c(2.0), c(0.0)]]).unwrap();
        assert!(matches!(
            HermitianObservable::dense("M", m, Basis::Computational(2)),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn parity_blocks_match_plain_solver() {
        for n in [9usize, 10] {
            let m = CMat::from_fn(n, n, |i, j| {
                let (a, b) = (i.min(j) as f64, i.max(j) as f64);
                let (ma, mb) = (
                    (n - 1 - j).min(n - 1 - i) as f64,
                    (n - 1 - i).max(n - 1 - j) as f64,
                );
                c(((a + 1.0) * (b + 2.0)).sin() + ((ma + 1.0) * (mb + 2.0)).sin())
            });
            let obs = HermitianObservable::dense("H", m.clone(), Basis::Computational(n)).unwrap();
            let fast = diagonalize(&obs).unwrap();
            assert!(fast.spectrum().unwrap().parity().is_some());
            let (plain, _) = m.self_adjoint_eigen().unwrap();
            for (a, b) in fast.eigenvalues().unwrap().iter().zip(&plain) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            assert!(reconstruction_error(&fast) < 1e-12);
            assert!(fast.spectrum().unwrap().unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = CMat::from_fn(4, 4, |i, j| {
            let s = (i + 2 * j) as f64;
            let t = (j + 2 * i) as f64;
            let z = C64::new(s.cos() + t.cos(), s.sin() - t.sin());
            if i == j {
                C64::new(z.re, 0.0)
            } else {
                z
            }
        });
        let obs =
            diagonalize(&HermitianObservable::dense("M", m, Basis::Computational(4)).unwrap())
                .unwrap();
        assert!(reconstruction_error(&obs) < 1e-12);
        assert!(obs.spectrum().unwrap().unitarity_defect() < 1e-12);
    }

    #[test]
    fn degenerate_values_grouped() {
        let obs =
            HermitianObservable::diagonal("D", vec![2.0, 0.0, 2.0, 1.0], Basis::Computational(4))
                .unwrap();
        let obs = diagonalize(&obs).unwrap();
        assert_eq!(obs.spectrum().unwrap().groups(), vec![0..1, 1..2, 2..4]);
    }
}
