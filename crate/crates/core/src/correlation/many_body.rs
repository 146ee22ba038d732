use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::measurement::dephasing_factor;
use crate::observable::HermitianObservable;
use crate::propagator::Propagator;
use crate::state::QuantumState;
use crate::truncation::{select_support, TruncationReport, CORRELATION_TAIL};
use crate::two_time::{heisenberg_from_transition, transition_amplitudes, TwoTimeSystem};

use super::{kernel_term, residue, CorrelationResult, Method};

/// Cap on the enumerated product-basis dimension.
pub const MAX_PRODUCT_DIM: usize = 100_000;
const MAX_DENSE_PRODUCT_DIM: usize = 4096;

/// Product state of N particles and the single-particle observable whose
/// average Â = Σ_ξ Â_ξ/N is measured first.
#[derive(Clone, Debug)]
pub struct ManyBodySpec {
    n: usize,
    factors: Vec<QuantumState>,
    observable: HermitianObservable,
}

impl ManyBodySpec {
    pub fn identical(
        n: usize,
        state: &QuantumState,
        observable: &HermitianObservable,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particle number must be at least 1"));
        }
        check_factor(state)?;
        Ok(ManyBodySpec {
            n,
            factors: vec![state.clone()],
            observable: observable.clone(),
        })
    }

    pub fn product(states: Vec<QuantumState>, observable: &HermitianObservable) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("product state needs at least one factor"));
        }
        states.iter().try_for_each(check_factor)?;
        Ok(ManyBodySpec {
            n: states.len(),
            factors: states,
            observable: observable.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn observable(&self) -> &HermitianObservable {
        &self.observable
    }

    pub fn is_identical(&self) -> bool {
        self.factors.len() == 1 || self.factors.windows(2).all(|w| w[0] == w[1])
    }

    pub fn factor(&self, nu: usize) -> &QuantumState {
        if self.factors.len() == 1 {
            &self.factors[0]
        } else {
            &self.factors[nu]
        }
    }
}

fn check_factor(s: &QuantumState) -> Result<()> {
    if !s.is_normalized(1e-8) {
        return Err(Error::invalid(format!(
            "factor states must be unit norm, got |ψ|² = {}",
            s.norm_sq()
        )));
    }
    Ok(())
}

/// How B(τ) acts on the product space.
#[derive(Clone, Copy, Debug)]
pub enum ManyBodyDynamics<'a> {
    /// The same single-particle B and propagator on every particle; the
    /// second measurement reads the intensive Σ_ξ B_ξ/N.
    NonInteracting {
        b: &'a HermitianObservable,
        prop: &'a Propagator,
    },
    /// Heisenberg matrix ⟨a_J|B(τ)|a_I⟩ on the full product eigenbasis of A,
    /// multi-index I = Σ_ν i_ν d^(N-1-ν).
    ProductBasis { heisenberg: &'a CMat, tau: f64 },
}

/// Explicit product-basis sum with the intensive damping
/// exp[-(Σ_ν a_{i_ν} - a_{j_ν})²/(8σ²N²)].
pub fn correlation_many_body(
    spec: &ManyBodySpec,
    dynamics: ManyBodyDynamics<'_>,
    sigma_a: f64,
) -> Result<CorrelationResult> {
    crate::measurement::kraus_amplitude(0.0, 0.0, sigma_a)?;
    let a = &spec.observable;
    let n = spec.n;
    let coeffs: Vec<Vec<C64>> = (0..n)
        .map(|nu| a.eigen_coefficients(spec.factor(nu)))
        .collect::<Result<_>>()?;
    let values = a.eigenvalues()?;
    match dynamics {
        ManyBodyDynamics::NonInteracting { b, prop } => {
            let mut union: Vec<usize> = Vec::new();
            let mut tail = 0.0;
            for c in &coeffs {
                let (s, rep) = select_support(c, CORRELATION_TAIL);
                union.extend(s);
                tail += rep.tail;
            }
            union.sort_unstable();
            union.dedup();
            let d = union.len();
            let dim = product_dim(d, n, MAX_PRODUCT_DIM)?;
            let w = transition_amplitudes(a, b, prop, &union)?;
            let b1 = heisenberg_from_transition(&w, b.eigenvalues()?);
            let av: Vec<f64> = union.iter().map(|&i| values[i]).collect();
            let cs: Vec<Vec<C64>> = coeffs
                .iter()
                .map(|c| union.iter().map(|&i| c[i]).collect())
                .collect();
            let (abar, cprod) = product_tables(&av, &cs, n, dim);
            let nf = n as f64;
            let mut acc = C64::new(0.0, 0.0);
            let mut mag = 0.0;
            let mut digits = vec![0usize; n];
            for big_i in 0..dim {
                decode(big_i, d, &mut digits);
                for (mu, &digit) in digits.iter().enumerate() {
                    let stride = d.pow((n - 1 - mu) as u32);
                    let base = big_i - digit * stride;
                    for j in 0..d {
                        let big_j = base + j * stride;
                        let term = kernel_term(
                            0.5 * (abar[big_i] + abar[big_j]),
                            cprod[big_j],
                            dephasing_factor(abar[big_i] - abar[big_j], sigma_a),
                            cprod[big_i],
                            b1.get(j, digit) / nf,
                        );
                        acc += term;
                        mag += term.norm();
                    }
                }
            }
            Ok(CorrelationResult {
                value: acc.re,
                imag_residue: residue(acc, mag),
                sigma_a: Some(sigma_a),
                sigma_b: None,
                t: spec.factor(0).time(),
                tau: prop.tau(),
                method: Method::ManyBody,
                truncation: TruncationReport {
                    retained: dim,
                    total: a.dim().saturating_pow(n as u32),
                    tail,
                },
            })
        }
        ManyBodyDynamics::ProductBasis { heisenberg, tau } => {
            let d = a.dim();
            let dim = product_dim(d, n, MAX_DENSE_PRODUCT_DIM)?;
            if heisenberg.nrows() != dim || heisenberg.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: heisenberg.nrows(),
                });
            }
            let (abar, cprod) = product_tables(values, &coeffs, n, dim);
            let mut acc = C64::new(0.0, 0.0);
            let mut mag = 0.0;
            for big_i in 0..dim {
                for big_j in 0..dim {
                    let term = kernel_term(
                        0.5 * (abar[big_i] + abar[big_j]),
                        cprod[big_j],
                        dephasing_factor(abar[big_i] - abar[big_j], sigma_a),
                        cprod[big_i],
                        heisenberg.get(big_j, big_i),
                    );
                    acc += term;
                    mag += term.norm();
                }
            }
            Ok(CorrelationResult {
                value: acc.re,
                imag_residue: residue(acc, mag),
                sigma_a: Some(sigma_a),
                sigma_b: None,
                t: spec.factor(0).time(),
                tau,
                method: Method::ManyBody,
                truncation: TruncationReport {
                    retained: dim,
                    total: dim,
                    tail: 0.0,
                },
            })
        }
    }
}

fn product_dim(d: usize, n: usize, cap: usize) -> Result<usize> {
    let dim = (0..n)
        .try_fold(1usize, |acc, _| acc.checked_mul(d))
        .filter(|&x| x <= cap);
    dim.ok_or_else(|| {
        Error::regime(format!(
            "product basis {d}^{n} exceeds the explicit-enumeration cap of {cap}; \
             use the collective correlator for identical non-interacting factors"
        ))
    })
}

fn decode(mut idx: usize, d: usize, digits: &mut [usize]) {
    for slot in digits.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
}

/// Intensive eigenvalue Ā_I and product amplitude c_I for every multi-index.
fn product_tables(av: &[f64], cs: &[Vec<C64>], n: usize, dim: usize) -> (Vec<f64>, Vec<C64>) {
    let d = av.len();
    let nf = n as f64;
    let factor = |nu: usize| if cs.len() == 1 { &cs[0] } else { &cs[nu] };
    let mut digits = vec![0usize; n];
    let mut abar = Vec::with_capacity(dim);
    let mut cprod = Vec::with_capacity(dim);
    for big_i in 0..dim {
        decode(big_i, d, &mut digits);
        let mut s = 0.0;
        let mut c = C64::new(1.0, 0.0);
        for (nu, &i) in digits.iter().enumerate() {
            s += av[i];
            c *= factor(nu)[i];
        }
        abar.push(s / nf);
        cprod.push(c);
    }
    (abar, cprod)
}

/// Closed-form correlator of N identical non-interacting copies:
/// (1/N) Re Σ_{i,j} ℰ_ji(Nσ) B_ji (a_i + (N-1)⟨A⟩).
pub fn correlation_collective(
    spec: &ManyBodySpec,
    b: &HermitianObservable,
    prop: &Propagator,
    sigma_a: f64,
) -> Result<CorrelationResult> {
    crate::measurement::kraus_amplitude(0.0, 0.0, sigma_a)?;
    if !spec.is_identical() {
        return Err(Error::invalid(
            "collective correlator needs identical factor states",
        ));
    }
    let sys = TwoTimeSystem::prepare(spec.factor(0), &spec.observable, b, prop, CORRELATION_TAIL)?;
    Ok(sys.collective(sigma_a, spec.n))
}
