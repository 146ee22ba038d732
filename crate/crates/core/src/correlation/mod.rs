//! Two-time correlators ⟨y_A(t) y_B(τ)⟩ by pointer quadrature, by the closed
//! form in the eigenbasis of A, in the weak and projective limits, and for
//! ensembles of non-interacting copies.

mod backaction;
mod dimension;
mod many_body;
mod trace;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use backaction::{
    backaction_first_order, BackactionReport, Expansion, ExpansionFidelity, WEAK_REGIME_RATIO,
};
pub use dimension::{
    effective_dimension, effective_dimension_many_body, intensive_variance, EffectiveDimension,
    DEFAULT_OCCUPATION_THRESHOLD,
};
pub use many_body::{
    correlation_collective, correlation_many_body, ManyBodyDynamics, ManyBodySpec, MAX_PRODUCT_DIM,
};
pub use trace::{Coupling, TraceEngine};

use crate::error::Result;
use crate::format::fmt_f64;
use crate::linalg::{CMat, C64};
use crate::measurement::{dephasing_factor, JointDistribution};
use crate::observable::HermitianObservable;
use crate::propagator::Propagator;
use crate::state::QuantumState;
use crate::truncation::{TruncationReport, CORRELATION_TAIL};
use crate::two_time::TwoTimeSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    ClosedForm,
    ManyBody,
    Collective,
    IwmLimit,
    ProjectiveLimit,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::ClosedForm => "closed_form",
            Method::ManyBody => "many_body",
            Method::Collective => "collective",
            Method::IwmLimit => "iwm_limit",
            Method::ProjectiveLimit => "projective_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub value: f64,
    /// |Im| of the symmetrized sum relative to the sum of term magnitudes.
    pub imag_residue: f64,
    pub sigma_a: Option<f64>,
    pub sigma_b: Option<f64>,
    pub t: f64,
    pub tau: f64,
    pub method: Method,
    pub truncation: TruncationReport,
}

/// Header `sigma,tau,value,method,truncation_tail`; limits are written with
/// `sigma` = 0 (projective) or `inf` (ideally weak).
pub fn correlation_csv(rows: &[CorrelationResult]) -> String {
    let mut s = String::from("sigma,tau,value,method,truncation_tail\n");
    for r in rows {
        let sigma = match (r.sigma_a, r.method) {
            (Some(x), _) => fmt_f64(x),
            (None, Method::ProjectiveLimit) => fmt_f64(0.0),
            (None, _) => "inf".to_string(),
        };
        let _ = writeln!(
            s,
            "{sigma},{},{},{},{}",
            fmt_f64(r.tau),
            fmt_f64(r.value),
            r.method.as_str(),
            fmt_f64(r.truncation.tail)
        );
    }
    s
}

/// Σ_{i,j} w_ij c_j* D_ij c_i B_ji with w_ij = (a_i + a_j)/2 + shift.
///
/// The symmetric weight makes the summand matrix Hermitian, so the exact sum
/// is real and equals ½Σ a_i ℰ_ji B_ji + c.c.; the computed imaginary part
/// measures rounding only. Returns (sum, Σ|terms|).
pub(crate) fn weighted_sum(
    a: &[f64],
    c: &[C64],
    b: &CMat,
    shift: f64,
    damping: impl Fn(usize, usize) -> f64,
) -> (C64, f64) {
    let mut acc = C64::new(0.0, 0.0);
    let mut mag = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let term = kernel_term(
                0.5 * (a[i] + a[j]) + shift,
                c[j],
                damping(i, j),
                c[i],
                b.get(j, i),
            );
            acc += term;
            mag += term.norm();
        }
    }
    (acc, mag)
}

#[inline]
pub(crate) fn kernel_term(w: f64, cj: C64, d: f64, ci: C64, bji: C64) -> C64 {
    w * (cj.conj() * d * ci) * bji
}

pub(crate) fn residue(sum: C64, mag: f64) -> f64 {
    if mag > 0.0 {
        sum.im.abs() / mag
    } else {
        0.0
    }
}

impl TwoTimeSystem {
    fn result(
        &self,
        sum: C64,
        mag: f64,
        sigma_a: Option<f64>,
        method: Method,
    ) -> CorrelationResult {
        CorrelationResult {
            value: sum.re,
            imag_residue: residue(sum, mag),
            sigma_a,
            sigma_b: None,
            t: self.t(),
            tau: self.tau(),
            method,
            truncation: self.truncation(),
        }
    }

    pub fn closed_form(&self, sigma_a: f64) -> CorrelationResult {
        let a = self.a_values();
        let (s, m) = weighted_sum(a, self.coefficients(), self.heisenberg(), 0.0, |i, j| {
            dephasing_factor(a[i] - a[j], sigma_a)
        });
        self.result(s, m, Some(sigma_a), Method::ClosedForm)
    }

    pub fn iwm_limit(&self) -> CorrelationResult {
        let (s, m) = weighted_sum(
            self.a_values(),
            self.coefficients(),
            self.heisenberg(),
            0.0,
            |_, _| 1.0,
        );
        self.result(s, m, None, Method::IwmLimit)
    }

    /// Lüders limit: only pairs inside one degenerate eigenspace survive.
    pub fn projective_limit(&self) -> CorrelationResult {
        let g = self.a_groups();
        let (s, m) = weighted_sum(
            self.a_values(),
            self.coefficients(),
            self.heisenberg(),
            0.0,
            |i, j| {
                if g[i] == g[j] {
                    1.0
                } else {
                    0.0
                }
            },
        );
        self.result(s, m, None, Method::ProjectiveLimit)
    }

    /// Collective correlator of N identical non-interacting copies.
    pub fn collective(&self, sigma_a: f64, n: usize) -> CorrelationResult {
        let nf = n as f64;
        let a = self.a_values();
        let shift = (nf - 1.0) * self.mean_a();
        let sigma_eff = sigma_a * nf;
        let (s, m) = weighted_sum(a, self.coefficients(), self.heisenberg(), shift, |i, j| {
            dephasing_factor(a[i] - a[j], sigma_eff)
        });
        self.result(s / nf, m / nf, Some(sigma_a), Method::Collective)
    }
}

fn prepare(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
) -> Result<TwoTimeSystem> {
    TwoTimeSystem::prepare(state, a, b, prop, CORRELATION_TAIL)
}

/// ½Σ_{i,j} a_i ℰ_ji B_ji(τ) + c.c. with ℰ_ji = c_j* exp[-(a_i-a_j)²/8σ²] c_i.
pub fn correlation_closed_form(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
    sigma_a: f64,
) -> Result<CorrelationResult> {
    crate::measurement::kraus_amplitude(0.0, 0.0, sigma_a)?;
    Ok(prepare(state, a, b, prop)?.closed_form(sigma_a))
}

/// Re⟨ψ|A B(τ)|ψ⟩.
pub fn correlation_iwm_limit(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
) -> Result<CorrelationResult> {
    Ok(prepare(state, a, b, prop)?.iwm_limit())
}

pub fn correlation_projective_limit(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
) -> Result<CorrelationResult> {
    Ok(prepare(state, a, b, prop)?.projective_limit())
}

/// ∫∫ y_A y_B P(y_A, y_B) by 2-D trapezoid quadrature.
pub fn correlation_brute_force(joint: &JointDistribution) -> CorrelationResult {
    let n = joint.y_a.len * joint.y_b.len;
    CorrelationResult {
        value: joint.correlation(),
        imag_residue: 0.0,
        sigma_a: Some(joint.sigma_a),
        sigma_b: Some(joint.sigma_b),
        t: joint.t,
        tau: joint.tau,
        method: Method::BruteForce,
        truncation: TruncationReport {
            retained: n,
            total: n,
            tail: 0.0,
        },
    }
}
