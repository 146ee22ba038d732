use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fidelity_deficit, C64};
use crate::measurement::{kraus_amplitude, kraus_unchecked};
use crate::observable::HermitianObservable;
use crate::propagator::Propagator;
use crate::state::QuantumState;
use crate::truncation::DISTRIBUTION_TAIL;
use crate::two_time::TwoTimeSystem;

use super::dimension::{effective_dimension, DEFAULT_OCCUPATION_THRESHOLD};

/// Minimum σ / d_eff accepted by the first-order diagnostic.
pub const WEAK_REGIME_RATIO: f64 = 1e3;

/// First-order forms of the two-time state for large couplings, with
/// |ψ(τ)⟩ = U|ψ⟩ and |ψ̃(τ)⟩ = U A|ψ⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// Ω_{y_B}Ω_{y_A}(I - y_A B/σ_A²)(|ψ(τ)⟩ - y_B/σ_B² |ψ̃(τ)⟩).
    AsPrinted,
    /// Ω_{y_B}Ω_{y_A}(I - y_B B/σ_B²)(|ψ(τ)⟩ - y_A/σ_A² |ψ̃(τ)⟩).
    RolesSwapped,
    /// Ω_{y_B}Ω_{y_A}(I + y_B B/2σ_B²)(|ψ(τ)⟩ + y_A/2σ_A² |ψ̃(τ)⟩), the
    /// linearization of the Gaussian Kraus factors.
    Taylor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFidelity {
    pub expansion: Expansion,
    /// 1 - |⟨exact|approx⟩|² / (‖exact‖²‖approx‖²).
    pub fidelity_deficit: f64,
}

#[derive(Clone, Debug)]
pub struct BackactionReport {
    pub exact: QuantumState,
    pub approximants: Vec<(Expansion, QuantumState)>,
    pub fidelities: Vec<ExpansionFidelity>,
    /// Better of `AsPrinted` and `RolesSwapped`.
    pub closer_printed_form: Expansion,
}

#[allow(clippy::too_many_arguments)]
pub fn backaction_first_order(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    prop: &Propagator,
    sigma_a: f64,
    sigma_b: f64,
    y_a: f64,
    y_b: f64,
) -> Result<BackactionReport> {
    kraus_amplitude(0.0, 0.0, sigma_a)?;
    kraus_amplitude(0.0, 0.0, sigma_b)?;
    let sys = TwoTimeSystem::prepare(state, a, b, prop, DISTRIBUTION_TAIL)?;
    let d_a = effective_dimension(state, a, DEFAULT_OCCUPATION_THRESHOLD)?.value;
    let evolved = crate::propagator::evolve(state, prop)?;
    let d_b = effective_dimension(&evolved, b, DEFAULT_OCCUPATION_THRESHOLD)?.value;
    if sigma_a < WEAK_REGIME_RATIO * d_a || sigma_b < WEAK_REGIME_RATIO * d_b {
        return Err(Error::regime(format!(
            "first-order expansion needs σ_A ≥ {WEAK_REGIME_RATIO:.0e}·d_eff(A) = {:.3e} and \
             σ_B ≥ {WEAK_REGIME_RATIO:.0e}·d_eff(B) = {:.3e}; got σ_A = {sigma_a:.3e}, σ_B = {sigma_b:.3e}",
            WEAK_REGIME_RATIO * d_a,
            WEAK_REGIME_RATIO * d_b
        )));
    }

    let exact = sys.two_time_amplitudes(sigma_a, sigma_b, y_a, y_b);
    let w = sys.transition();
    let psi = w.mul_vec(sys.coefficients());
    let tilde_c: Vec<C64> = sys
        .coefficients()
        .iter()
        .zip(sys.a_values())
        .map(|(c, &ai)| c * ai)
        .collect();
    let psi_tilde = w.mul_vec(&tilde_c);
    let bv = sys.b_values();
    let pre = kraus_unchecked(y_a, 0.0, sigma_a) * kraus_unchecked(y_b, 0.0, sigma_b);

    let build = |op_coef: f64, tilde_coef: f64| -> Vec<C64> {
        psi.iter()
            .zip(&psi_tilde)
            .zip(bv)
            .map(|((p, t), &bj)| pre * (1.0 + op_coef * bj) * (p + tilde_coef * t))
            .collect()
    };
    let forms = [
        (
            Expansion::AsPrinted,
            build(-y_a / (sigma_a * sigma_a), -y_b / (sigma_b * sigma_b)),
        ),
        (
            Expansion::RolesSwapped,
            build(-y_b / (sigma_b * sigma_b), -y_a / (sigma_a * sigma_a)),
        ),
        (
            Expansion::Taylor,
            build(
                y_b / (2.0 * sigma_b * sigma_b),
                y_a / (2.0 * sigma_a * sigma_a),
            ),
        ),
    ];
    let fidelities: Vec<ExpansionFidelity> = forms
        .iter()
        .map(|(e, v)| ExpansionFidelity {
            expansion: *e,
            fidelity_deficit: fidelity_deficit(&exact, v),
        })
        .collect();
    let closer_printed_form = if fidelities[0].fidelity_deficit <= fidelities[1].fidelity_deficit {
        Expansion::AsPrinted
    } else {
        Expansion::RolesSwapped
    };
    let basis = b.eigenbasis();
    let time = state.time() + prop.tau();
    let approximants = forms
        .into_iter()
        .map(|(e, v)| Ok((e, QuantumState::from_coordinates(v, basis.clone(), time)?)))
        .collect::<Result<_>>()?;
    Ok(BackactionReport {
        exact: QuantumState::from_coordinates(exact, basis, time)?,
        approximants,
        fidelities,
        closer_printed_form,
    })
}
