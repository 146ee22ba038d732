use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::HermitianObservable;
use crate::state::QuantumState;

use super::ManyBodySpec;

pub const DEFAULT_OCCUPATION_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDimension {
    pub value: f64,
    pub occupation_threshold: f64,
}

/// Width max(a) - min(a) of the smallest set of eigenvalues, taken by
/// decreasing population, whose cumulative population reaches 1 - threshold.
pub fn effective_dimension(
    state: &QuantumState,
    a: &HermitianObservable,
    occupation_threshold: f64,
) -> Result<EffectiveDimension> {
    if !(occupation_threshold > 0.0 && occupation_threshold < 1.0) {
        return Err(Error::invalid(format!(
            "occupation threshold must lie in (0, 1), got {occupation_threshold}"
        )));
    }
    let c = a.eigen_coefficients(state)?;
    let values = a.eigenvalues()?;
    let pops: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = pops.iter().sum();
    let mut order: Vec<usize> = (0..pops.len()).collect();
    order.sort_by(|&i, &j| pops[j].total_cmp(&pops[i]).then(i.cmp(&j)));
    let target = (1.0 - occupation_threshold) * total;
    let (mut lo, mut hi, mut acc) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &i in &order {
        lo = lo.min(values[i]);
        hi = hi.max(values[i]);
        acc += pops[i];
        if acc >= target {
            break;
        }
    }
    Ok(EffectiveDimension {
        value: (hi - lo).max(0.0),
        occupation_threshold,
    })
}

/// Σ_ν max(ΔA_ν)/N over the factors.
pub fn effective_dimension_many_body(
    spec: &ManyBodySpec,
    occupation_threshold: f64,
) -> Result<EffectiveDimension> {
    let n = spec.n();
    let sum = if spec.is_identical() {
        n as f64
            * effective_dimension(spec.factor(0), spec.observable(), occupation_threshold)?.value
    } else {
        (0..n)
            .map(|nu| {
                effective_dimension(spec.factor(nu), spec.observable(), occupation_threshold)
                    .map(|d| d.value)
            })
            .sum::<Result<f64>>()?
    };
    Ok(EffectiveDimension {
        value: sum / n as f64,
        occupation_threshold,
    })
}

fn factor_moments(state: &QuantumState, a: &HermitianObservable) -> Result<(f64, f64)> {
    let c = a.eigen_coefficients(state)?;
    let values = a.eigenvalues()?;
    let mean: f64 = c.iter().zip(values).map(|(z, v)| z.norm_sqr() * v).sum();
    let var: f64 = c
        .iter()
        .zip(values)
        .map(|(z, v)| z.norm_sqr() * (v - mean) * (v - mean))
        .sum();
    Ok((mean, var))
}

/// ⟨Â²⟩ - ⟨Â⟩² of the intensive Â = Σ_ξ Â_ξ/N on a product state.
pub fn intensive_variance(spec: &ManyBodySpec) -> Result<f64> {
    let n = spec.n() as f64;
    if spec.is_identical() {
        let (_, var) = factor_moments(spec.factor(0), spec.observable())?;
        return Ok(var / n);
    }
    let mut total = 0.0;
    for nu in 0..spec.n() {
        total += factor_moments(spec.factor(nu), spec.observable())?.1;
    }
    Ok(total / (n * n))
}
