//! Split-storage complex matrices on top of faer.
//!
//! Grid problems are real (real symmetric Hamiltonian, real eigenvectors,
//! diagonal position operator), while the small random fixtures are complex
//! Hermitian. [`CMat`] keeps the imaginary part optional so that the real case
//! runs entirely on `f64` GEMMs and half the memory.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Debug)]
pub struct CMat {
    re: Mat<f64>,
    im: Option<Mat<f64>>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat {
            re: Mat::zeros(nrows, ncols),
            im: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        CMat {
            re: Mat::identity(n, n),
            im: None,
        }
    }

    pub fn from_real(re: Mat<f64>) -> Self {
        CMat { re, im: None }
    }

    /// Drops the imaginary part when it is identically zero.
    pub fn from_parts(re: Mat<f64>, im: Option<Mat<f64>>) -> Self {
        let im = im.filter(|m| !is_zero(m.as_ref()));
        CMat { re, im }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut re = Mat::zeros(nrows, ncols);
        let mut im = Mat::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                let z = f(i, j);
                re[(i, j)] = z.re;
                im[(i, j)] = z.im;
            }
        }
        CMat::from_parts(re, Some(im))
    }

    pub fn from_complex(m: MatRef<'_, C64>) -> Self {
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                got: bad.len(),
            });
        }
        Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    pub fn re(&self) -> MatRef<'_, f64> {
        self.re.as_ref()
    }

    pub fn im(&self) -> Option<MatRef<'_, f64>> {
        self.im.as_ref().map(Mat::as_ref)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[(i, j)], self.im.as_ref().map_or(0.0, |m| m[(i, j)]))
    }

    pub fn to_complex(&self) -> Mat<C64> {
        Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j))
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.nrows()).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        CMat {
            re: self.re.transpose().to_owned(),
            im: self.im.as_ref().map(|m| m.transpose().to_owned()),
        }
    }

    pub fn adjoint(&self) -> Self {
        CMat {
            re: self.re.transpose().to_owned(),
            im: self
                .im
                .as_ref()
                .map(|m| Mat::from_fn(m.ncols(), m.nrows(), |i, j| -m[(j, i)])),
        }
    }

    pub fn conj(&self) -> Self {
        CMat {
            re: self.re.clone(),
            im: self
                .im
                .as_ref()
                .map(|m| Mat::from_fn(m.nrows(), m.ncols(), |i, j| -m[(i, j)])),
        }
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.ncols(), rhs.nrows(), "inner dimensions differ");
        let re = gemm(self.re.as_ref(), rhs.re.as_ref());
        match (&self.im, &rhs.im) {
            (None, None) => CMat { re, im: None },
            (Some(ai), None) => CMat {
                re,
                im: Some(gemm(ai.as_ref(), rhs.re.as_ref())),
            },
            (None, Some(bi)) => CMat {
                re,
                im: Some(gemm(self.re.as_ref(), bi.as_ref())),
            },
            (Some(ai), Some(bi)) => {
                let mut re = re;
                matmul(
                    re.as_mut(),
                    Accum::Add,
                    ai.as_ref(),
                    bi.as_ref(),
                    -1.0,
                    Par::Seq,
                );
                let mut im = gemm(self.re.as_ref(), bi.as_ref());
                matmul(
                    im.as_mut(),
                    Accum::Add,
                    ai.as_ref(),
                    rhs.re.as_ref(),
                    1.0,
                    Par::Seq,
                );
                CMat::from_parts(re, Some(im))
            }
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.ncols(), v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.nrows()];
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vj;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> CMat {
        let pick = |m: &Mat<f64>| Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
        CMat {
            re: pick(&self.re),
            im: self.im.as_ref().map(pick),
        }
    }

    pub fn select_cols(&self, cols: &[usize]) -> CMat {
        let pick = |m: &Mat<f64>| Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])]);
        CMat {
            re: pick(&self.re),
            im: self.im.as_ref().map(pick),
        }
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[C64]) -> CMat {
        assert_eq!(d.len(), self.nrows());
        let real = d.iter().all(|z| z.im == 0.0);
        if real && self.is_real() {
            let re = Mat::from_fn(self.nrows(), self.ncols(), |i, j| d[i].re * self.re[(i, j)]);
            return CMat { re, im: None };
        }
        CMat::from_fn(self.nrows(), self.ncols(), |i, j| d[i] * self.get(i, j))
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[C64]) -> CMat {
        assert_eq!(d.len(), self.ncols());
        let real = d.iter().all(|z| z.im == 0.0);
        if real && self.is_real() {
            let re = Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.re[(i, j)] * d[j].re);
            return CMat { re, im: None };
        }
        CMat::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j) * d[j])
    }

    pub fn hadamard(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()));
        if self.is_real() && rhs.is_real() {
            let re = Mat::from_fn(self.nrows(), self.ncols(), |i, j| {
                self.re[(i, j)] * rhs.re[(i, j)]
            });
            return CMat { re, im: None };
        }
        CMat::from_fn(self.nrows(), self.ncols(), |i, j| {
            self.get(i, j) * rhs.get(i, j)
        })
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, rhs: &CMat) -> f64 {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()));
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max((self.get(i, j) - rhs.get(i, j)).norm());
            }
        }
        m
    }

    /// max |M - M^H|.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        let n = self.nrows();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
    pub fn self_adjoint_eigen(&self) -> Result<(Vec<f64>, CMat)> {
        match &self.im {
            None => {
                let evd = self
                    .re
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
                let values = (0..self.nrows()).map(|k| evd.S()[k]).collect();
                Ok((values, CMat::from_real(evd.U().to_owned())))
            }
            Some(_) => {
                let z = self.to_complex();
                let evd = z
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
                let values = (0..self.nrows()).map(|k| evd.S()[k].re).collect();
                Ok((values, CMat::from_complex(evd.U())))
            }
        }
    }
}

fn is_zero(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)] == 0.0))
}

pub(crate) fn gemm(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum()
}

/// 1 - |<u|v>|^2 / (|u|^2 |v|^2), evaluated from the component of `v`
/// orthogonal to `u` so that tiny deficits survive cancellation.
pub fn fidelity_deficit(u: &[C64], v: &[C64]) -> f64 {
    let uu = norm_sq(u);
    let vv = norm_sq(v);
    if uu == 0.0 || vv == 0.0 {
        return 1.0;
    }
    let proj = dot(u, v) / uu;
    let perp: f64 = u
        .iter()
        .zip(v)
        .map(|(x, y)| (y - proj * x).norm_sqr())
        .sum();
    (perp / vv).clamp(0.0, 1.0)
}
