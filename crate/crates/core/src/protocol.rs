//! The clumsiness-free macrorealism test: certify the ideally-weak regime of
//! the first measurement (IWM scan), then check no-signaling in time there,
//! and tabulate Δ(σ, N) for ensembles of non-interacting copies.

use serde::{Deserialize, Serialize};

use crate::correlation::{effective_dimension, DEFAULT_OCCUPATION_THRESHOLD};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::grid::UniformGrid;
use crate::measurement::{kraus_amplitude, pointer_grid_for, PointerDistribution};
use crate::observable::HermitianObservable;
use crate::propagator::Propagator;
use crate::state::QuantumState;
use crate::truncation::{CORRELATION_TAIL, DISTRIBUTION_TAIL};
use crate::two_time::TwoTimeSystem;

pub const DEFAULT_EPS_IWM: f64 = 1e-4;
pub const DEFAULT_EPS_NSIT: f64 = 1e-4;
pub const MIN_SCAN_POINTS: usize = 5;
pub const MIN_SCAN_DECADES: f64 = 2.0;
/// Smallest ensemble whose pointer distributions are taken in the Gaussian
/// (central-limit) form.
pub const CLT_MIN_N: usize = 100;
/// Default σ_B as a fraction of the length scale ℓ of A.
pub const DEFAULT_SIGMA_B_FRACTION: f64 = 0.1;
/// Tolerance multipliers of the verdict-stability grid.
pub const STABILITY_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// State, first and second observables and Hamiltonian of one particle.
#[derive(Clone, Debug)]
pub struct SystemFixture {
    pub state: QuantumState,
    pub a: HermitianObservable,
    pub b: HermitianObservable,
    pub hamiltonian: HermitianObservable,
}

/// N identical non-interacting copies of a fixture at a fixed delay τ, with
/// intensive observables Σ_ξ A_ξ/N and Σ_ξ B_ξ/N.
#[derive(Debug)]
pub struct ProtocolSystem {
    sys: TwoTimeSystem,
    n: usize,
    tau: f64,
    d_eff: f64,
    length: f64,
    var_a: f64,
    var_b: f64,
}

impl ProtocolSystem {
    pub fn new(fixture: &SystemFixture, tau: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particle number must be at least 1"));
        }
        let prop = Propagator::new(&fixture.hamiltonian, tau)?;
        let sys = TwoTimeSystem::prepare(
            &fixture.state,
            &fixture.a,
            &fixture.b,
            &prop,
            DISTRIBUTION_TAIL,
        )?;
        let d_eff =
            effective_dimension(&fixture.state, &fixture.a, DEFAULT_OCCUPATION_THRESHOLD)?.value;
        let width = fixture.a.spectrum()?.width();
        let length = if d_eff > 0.0 {
            d_eff
        } else if width > 0.0 {
            width
        } else {
            1.0
        };
        let var_a = sys.variance_a();
        let var_b = sys.variance_b(None);
        Ok(ProtocolSystem {
            sys,
            n,
            tau,
            d_eff,
            length,
            var_a,
            var_b,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn d_eff(&self) -> f64 {
        self.d_eff
    }

    /// d_eff, or the spectral width of A when d_eff vanishes, or 1.
    pub fn length_scale(&self) -> f64 {
        self.length
    }

    /// √(var A · var B(τ)) of one particle, or 1 when it vanishes.
    pub fn correlation_scale(&self) -> f64 {
        let s = (self.var_a * self.var_b).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    fn check_distributions(&self) -> Result<()> {
        if self.n == 1 || self.n >= CLT_MIN_N {
            Ok(())
        } else {
            Err(Error::regime(format!(
                "pointer distributions are available for N = 1 (exact) and N ≥ {CLT_MIN_N} (Gaussian limit); got N = {}",
                self.n
            )))
        }
    }

    pub fn pointer_grid_b(&self, sigma_b: f64) -> Result<UniformGrid> {
        self.check_distributions()?;
        kraus_amplitude(0.0, 0.0, sigma_b)?;
        if self.n == 1 {
            return self.sys.pointer_grid_b(sigma_b);
        }
        let (lo, hi) = self.sys.occupied_b_range();
        let half = 0.5 * (hi - lo);
        let width = (half * half / self.n as f64 + sigma_b * sigma_b).sqrt();
        pointer_grid_for(lo, hi, width)
    }

    /// Distribution of the second readout, after a first measurement of
    /// strength `sigma_a` or without one (`None`).
    pub fn reduced_distribution(
        &self,
        sigma_a: Option<f64>,
        sigma_b: f64,
        grid: &UniformGrid,
    ) -> Result<PointerDistribution> {
        self.check_distributions()?;
        if let Some(s) = sigma_a {
            kraus_amplitude(0.0, 0.0, s)?;
        }
        kraus_amplitude(0.0, 0.0, sigma_b)?;
        if self.n == 1 {
            return Ok(self.sys.reduced_distribution(sigma_a, sigma_b, grid));
        }
        let nf = self.n as f64;
        let per_particle = sigma_a.map(|s| s * nf);
        let mean = self.sys.mean_b(per_particle);
        let var = self.sys.variance_b(per_particle) / nf + sigma_b * sigma_b;
        let norm = (2.0 * std::f64::consts::PI * var).sqrt();
        let density = grid
            .points()
            .iter()
            .map(|&y| (-(y - mean) * (y - mean) / (2.0 * var)).exp() / norm)
            .collect();
        Ok(PointerDistribution::new(*grid, density, sigma_b))
    }

    /// ⟨y_A y_B⟩ of the intensive observables.
    pub fn correlation(&self, sigma_a: f64) -> Result<f64> {
        kraus_amplitude(0.0, 0.0, sigma_a)?;
        Ok(self.sys.collective(sigma_a, self.n).value)
    }

    /// Δ_QC = ⟨y_A y_B⟩ - ⟨y_A⟩⟨y_B⟩.
    pub fn delta_qc(&self, sigma_a: f64) -> Result<f64> {
        let c = self.correlation(sigma_a)?;
        Ok(c - self.sys.mean_a() * self.sys.mean_b(Some(sigma_a * self.n as f64)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IwmScan {
    pub sigma_values: Vec<f64>,
    pub sigma_b: f64,
    pub y_b_grid: UniformGrid,
    pub reduced_distributions: Vec<Vec<f64>>,
    /// d_k = ‖R(σ_{k+1}) - R(σ_k)‖₁ / (σ_{k+1} - σ_k).
    pub derivative_norms: Vec<f64>,
    /// d_k σ_k.
    pub scaled_derivatives: Vec<f64>,
    pub sigma_threshold: Option<f64>,
    pub tolerance: f64,
    pub d_eff: f64,
}

impl IwmScan {
    /// Builds the scan from reduced distributions already evaluated at
    /// `sigma_values`; all of them must share one y_B grid.
    pub fn from_distributions(
        sigma_values: &[f64],
        distributions: &[PointerDistribution],
        tolerance: f64,
        d_eff: f64,
    ) -> Result<Self> {
        check_sigma_scan(sigma_values)?;
        check_tolerance("eps_iwm", tolerance)?;
        if distributions.len() != sigma_values.len() {
            return Err(Error::DimensionMismatch {
                expected: sigma_values.len(),
                got: distributions.len(),
            });
        }
        let grid = distributions[0].grid;
        if distributions.iter().any(|d| d.grid != grid) {
            return Err(Error::invalid(
                "IWM scan needs every reduced distribution on the same y_B grid",
            ));
        }
        let mut derivative_norms = Vec::with_capacity(sigma_values.len() - 1);
        for k in 0..sigma_values.len() - 1 {
            let l1 = distributions[k + 1].l1_distance(&distributions[k])?;
            derivative_norms.push(l1 / (sigma_values[k + 1] - sigma_values[k]));
        }
        let scaled_derivatives: Vec<f64> = derivative_norms
            .iter()
            .zip(sigma_values)
            .map(|(d, s)| d * s)
            .collect();
        let sigma_threshold = detect_threshold(sigma_values, &scaled_derivatives, tolerance, d_eff);
        Ok(IwmScan {
            sigma_values: sigma_values.to_vec(),
            sigma_b: distributions[0].sigma,
            y_b_grid: grid,
            reduced_distributions: distributions.iter().map(|d| d.density.clone()).collect(),
            derivative_norms,
            scaled_derivatives,
            sigma_threshold,
            tolerance,
            d_eff,
        })
    }

    /// σ-scaled derivative norm in effect at `sigma_a`.
    pub fn scaled_derivative_at(&self, sigma_a: f64) -> f64 {
        let k = self.sigma_values[..self.scaled_derivatives.len()]
            .iter()
            .rposition(|&s| s <= sigma_a)
            .unwrap_or(0);
        self.scaled_derivatives[k]
    }
}

/// Smallest σ_k ≥ d_eff after which every d_j σ_j is below `tolerance`.
fn detect_threshold(sigmas: &[f64], scaled: &[f64], tolerance: f64, d_eff: f64) -> Option<f64> {
    (0..scaled.len())
        .find(|&k| sigmas[k] >= d_eff && scaled[k..].iter().all(|&d| d < tolerance))
        .map(|k| sigmas[k])
}

fn check_sigma_scan(sigmas: &[f64]) -> Result<()> {
    if sigmas.len() < MIN_SCAN_POINTS {
        return Err(Error::invalid(format!(
            "IWM scan needs at least {MIN_SCAN_POINTS} σ values, got {}",
            sigmas.len()
        )));
    }
    if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite()))
        || sigmas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::invalid(
            "σ values must be positive, finite and strictly increasing",
        ));
    }
    let decades = (sigmas[sigmas.len() - 1] / sigmas[0]).log10();
    if decades < MIN_SCAN_DECADES - 1e-9 {
        return Err(Error::invalid(format!(
            "IWM scan must span at least {MIN_SCAN_DECADES} decades of σ, got {decades:.3}"
        )));
    }
    Ok(())
}

fn check_tolerance(name: &str, eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive, got {eps}"
        )))
    }
}

pub fn iwm_scan(
    system: &ProtocolSystem,
    sigma_values: &[f64],
    sigma_b: f64,
    eps_iwm: f64,
) -> Result<IwmScan> {
    check_sigma_scan(sigma_values)?;
    let grid = system.pointer_grid_b(sigma_b)?;
    let dists = sigma_values
        .iter()
        .map(|&s| system.reduced_distribution(Some(s), sigma_b, &grid))
        .collect::<Result<Vec<_>>>()?;
    IwmScan::from_distributions(sigma_values, &dists, eps_iwm, system.d_eff())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NsitVerdict {
    Holds,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsitResult {
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// ∫|P(y_B) - ∫dy_A P(y_A, y_B)| dy_B.
    pub l1_residual: f64,
    /// l1_residual · (σ_A/ℓ)², independent of σ_A deep in the IWM regime.
    pub scaled_residual: f64,
    /// |Δ_QC(σ_A)| / √(var A · var B).
    pub factorization_gap: f64,
    pub tolerance: f64,
    pub verdict: NsitVerdict,
}

fn nsit_verdict(scaled_residual: f64, factorization_gap: f64, eps: f64) -> NsitVerdict {
    if scaled_residual > eps || factorization_gap > eps {
        NsitVerdict::Violated
    } else {
        NsitVerdict::Holds
    }
}

/// Refuses unless `scan` found a threshold and `sigma_a` is at or above it.
pub fn nsit_test(
    system: &ProtocolSystem,
    scan: &IwmScan,
    sigma_a: f64,
    sigma_b: f64,
    eps_nsit: f64,
) -> Result<NsitResult> {
    check_tolerance("eps_nsit", eps_nsit)?;
    let threshold = scan.sigma_threshold.ok_or_else(|| {
        Error::IwmNotEstablished(format!(
            "no σ threshold in the scan over [{}, {}] at ε_iwm = {}; extend the σ grid upwards",
            fmt_f64(scan.sigma_values[0]),
            fmt_f64(scan.sigma_values[scan.sigma_values.len() - 1]),
            scan.tolerance
        ))
    })?;
    if !(sigma_a >= threshold) {
        return Err(Error::IwmNotEstablished(format!(
            "σ_A = {} is below the IWM threshold σ_A0 = {}",
            fmt_f64(sigma_a),
            fmt_f64(threshold)
        )));
    }
    let grid = system.pointer_grid_b(sigma_b)?;
    let measured = system.reduced_distribution(Some(sigma_a), sigma_b, &grid)?;
    let unmeasured = system.reduced_distribution(None, sigma_b, &grid)?;
    let l1_residual = measured.l1_distance(&unmeasured)?.min(2.0);
    let ratio = sigma_a / system.length_scale();
    let scaled_residual = l1_residual * ratio * ratio;
    let factorization_gap = system.delta_qc(sigma_a)?.abs() / system.correlation_scale();
    Ok(NsitResult {
        sigma_a,
        sigma_b,
        l1_residual,
        scaled_residual,
        factorization_gap,
        tolerance: eps_nsit,
        verdict: nsit_verdict(scaled_residual, factorization_gap, eps_nsit),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// The correlator still depends on σ.
    Contextual,
    Macrorealistic,
    NonMacrorealistic,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Contextual => "contextual",
            Region::Macrorealistic => "macrorealistic",
            Region::NonMacrorealistic => "non-macrorealistic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub sigma: f64,
    pub n: usize,
    pub correlation: f64,
    pub delta: f64,
    pub delta_qc: f64,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDelta {
    pub n: usize,
    pub sigma: f64,
    pub delta: f64,
    pub delta_qc: f64,
    pub region: Region,
}

/// Least-squares fit of ln|Δ| against N (exponential) or ln N (power law).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// ln|Δ| at N = 0 (exponential) or N = 1 (power law).
    pub intercept: f64,
    /// Decay rate κ in |Δ| ∝ e^{-κN}, or exponent p in |Δ| ∝ N^{-p}.
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub tau: f64,
    pub scale: f64,
    pub eps_iwm: f64,
    pub eps_nsit: f64,
    pub entries: Vec<DeltaEntry>,
    pub asymptotic: Vec<AsymptoticDelta>,
    pub exponential_fit: Option<DecayFit>,
    pub power_law_fit: Option<DecayFit>,
}

impl DeltaTable {
    /// Header `sigma,N,delta,delta_qc`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sigma,N,delta,delta_qc\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(e.sigma),
                e.n,
                fmt_f64(e.delta),
                fmt_f64(e.delta_qc)
            ));
        }
        s
    }

    pub fn asymptotic_for(&self, n: usize) -> Option<&AsymptoticDelta> {
        self.asymptotic.iter().find(|a| a.n == n)
    }
}

fn classify(dc: f64, delta: f64, scale: f64, eps_iwm: f64, eps_nsit: f64) -> Region {
    if dc.abs() / scale >= eps_iwm {
        Region::Contextual
    } else if delta.abs() / scale < eps_nsit {
        Region::Macrorealistic
    } else {
        Region::NonMacrorealistic
    }
}

/// Δ(σ_k, N) = [C(σ_{k+1}, N) - C(σ_k, N)] - Δ_QC(σ_k, N), with a backward
/// difference at the last σ.
pub fn delta_statistic(
    fixture: &SystemFixture,
    sigma_values: &[f64],
    n_values: &[usize],
    tau: f64,
    eps_iwm: f64,
    eps_nsit: f64,
) -> Result<DeltaTable> {
    if sigma_values.len() < 2 {
        return Err(Error::invalid("Δ statistic needs at least 2 σ values"));
    }
    if sigma_values.iter().any(|&s| !(s > 0.0 && s.is_finite()))
        || sigma_values.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::invalid(
            "σ values must be positive, finite and strictly increasing",
        ));
    }
    if n_values.is_empty() || n_values.contains(&0) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "N values must be positive and strictly increasing",
        ));
    }
    check_tolerance("eps_iwm", eps_iwm)?;
    check_tolerance("eps_nsit", eps_nsit)?;
    let prop = Propagator::new(&fixture.hamiltonian, tau)?;
    let sys = TwoTimeSystem::prepare(
        &fixture.state,
        &fixture.a,
        &fixture.b,
        &prop,
        CORRELATION_TAIL,
    )?;
    let scale = {
        let s = (sys.variance_a() * sys.variance_b(None)).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let mean_a = sys.mean_a();
    let mut entries = Vec::with_capacity(sigma_values.len() * n_values.len());
    let mut asymptotic = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let nf = n as f64;
        let c: Vec<f64> = sigma_values
            .iter()
            .map(|&s| sys.collective(s, n).value)
            .collect();
        let qc: Vec<f64> = sigma_values
            .iter()
            .zip(&c)
            .map(|(&s, &ck)| ck - mean_a * sys.mean_b(Some(s * nf)))
            .collect();
        let last = sigma_values.len() - 1;
        for k in 0..=last {
            let dc = if k < last {
                c[k + 1] - c[k]
            } else {
                c[last] - c[last - 1]
            };
            let delta = dc - qc[k];
            entries.push(DeltaEntry {
                sigma: sigma_values[k],
                n,
                correlation: c[k],
                delta,
                delta_qc: qc[k],
                region: classify(dc, delta, scale, eps_iwm, eps_nsit),
            });
        }
        let e = &entries[entries.len() - 1];
        asymptotic.push(AsymptoticDelta {
            n,
            sigma: e.sigma,
            delta: e.delta,
            delta_qc: e.delta_qc,
            region: e.region,
        });
    }
    let pts: Vec<(f64, f64)> = asymptotic
        .iter()
        .filter(|a| a.delta != 0.0)
        .map(|a| (a.n as f64, a.delta.abs().ln()))
        .collect();
    let exponential_fit = fit_line(&pts).map(|(b, m, r2)| DecayFit {
        intercept: b,
        rate: -m,
        r_squared: r2,
        points: pts.len(),
    });
    let log_pts: Vec<(f64, f64)> = pts.iter().map(|&(n, y)| (n.ln(), y)).collect();
    let power_law_fit = fit_line(&log_pts).map(|(b, m, r2)| DecayFit {
        intercept: b,
        rate: -m,
        r_squared: r2,
        points: pts.len(),
    });
    Ok(DeltaTable {
        tau,
        scale,
        eps_iwm,
        eps_nsit,
        entries,
        asymptotic,
        exponential_fit,
        power_law_fit,
    })
}

/// Ordinary least squares y = b + m x; returns (b, m, R²). Needs ≥ 3 points.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let m = sxy / sxx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    Some((my - m * mx, m, r2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "macrorealistic")]
    Macrorealistic,
    #[serde(rename = "non-macrorealistic")]
    NonMacrorealistic,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Macrorealistic => "macrorealistic",
            Verdict::NonMacrorealistic => "non-macrorealistic",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub sigma_values: Vec<f64>,
    pub tau: f64,
    pub n: usize,
    /// Second-measurement coupling; defaults to 0.1·ℓ.
    pub sigma_b: Option<f64>,
    /// First-measurement coupling of the NSIT test; defaults to the largest
    /// scanned σ.
    pub sigma_a: Option<f64>,
    pub eps_iwm: f64,
    pub eps_nsit: f64,
}

impl ProtocolConfig {
    pub fn new(sigma_values: Vec<f64>, tau: f64, n: usize) -> Self {
        ProtocolConfig {
            sigma_values,
            tau,
            n,
            sigma_b: None,
            sigma_a: None,
            eps_iwm: DEFAULT_EPS_IWM,
            eps_nsit: DEFAULT_EPS_NSIT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_iwm: f64,
    pub eps_nsit: f64,
    pub occupation_threshold: f64,
    pub correlation_tail: f64,
    pub distribution_tail: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub eps_iwm: f64,
    pub eps_nsit: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictStability {
    pub entries: Vec<StabilityEntry>,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub verdict: Verdict,
    pub n: usize,
    pub tau: f64,
    pub d_eff: f64,
    pub iwm: IwmScan,
    pub nsit: Option<NsitResult>,
    /// Set when NSIT holds: whether the IWM derivative at σ_A is below ε_iwm.
    pub nsit_implies_iwm: Option<bool>,
    /// Δ(σ, N) over the scanned σ at the report's N.
    pub delta: DeltaTable,
    pub stability: VerdictStability,
    pub tolerances: Tolerances,
}

pub fn run_protocol(fixture: &SystemFixture, config: &ProtocolConfig) -> Result<ProtocolReport> {
    let system = ProtocolSystem::new(fixture, config.tau, config.n)?;
    let sigma_b = config
        .sigma_b
        .unwrap_or(DEFAULT_SIGMA_B_FRACTION * system.length_scale());
    let scan = iwm_scan(&system, &config.sigma_values, sigma_b, config.eps_iwm)?;
    let tolerances = Tolerances {
        eps_iwm: config.eps_iwm,
        eps_nsit: config.eps_nsit,
        occupation_threshold: DEFAULT_OCCUPATION_THRESHOLD,
        correlation_tail: CORRELATION_TAIL,
        distribution_tail: DISTRIBUTION_TAIL,
    };
    let sigma_a = config
        .sigma_a
        .unwrap_or(config.sigma_values[config.sigma_values.len() - 1]);
    let (verdict, nsit) = match scan.sigma_threshold {
        None => (Verdict::Inconclusive, None),
        Some(_) => {
            let r = nsit_test(&system, &scan, sigma_a, sigma_b, config.eps_nsit)?;
            let v = match r.verdict {
                NsitVerdict::Holds => Verdict::Macrorealistic,
                NsitVerdict::Violated => Verdict::NonMacrorealistic,
            };
            (v, Some(r))
        }
    };
    let nsit_implies_iwm = nsit
        .as_ref()
        .filter(|r| r.verdict == NsitVerdict::Holds)
        .map(|r| scan.scaled_derivative_at(r.sigma_a) < config.eps_iwm);
    let stability = stability_grid(&scan, nsit.as_ref(), sigma_a, config, verdict);
    let delta = delta_statistic(
        fixture,
        &config.sigma_values,
        &[config.n],
        config.tau,
        config.eps_iwm,
        config.eps_nsit,
    )?;
    Ok(ProtocolReport {
        verdict,
        n: config.n,
        tau: config.tau,
        d_eff: system.d_eff(),
        iwm: scan,
        nsit,
        nsit_implies_iwm,
        delta,
        stability,
        tolerances,
    })
}

fn stability_grid(
    scan: &IwmScan,
    nsit: Option<&NsitResult>,
    sigma_a: f64,
    config: &ProtocolConfig,
    verdict: Verdict,
) -> VerdictStability {
    let mut entries = Vec::with_capacity(STABILITY_FACTORS.len() * STABILITY_FACTORS.len());
    for fi in STABILITY_FACTORS {
        for fn_ in STABILITY_FACTORS {
            let eps_iwm = config.eps_iwm * fi;
            let eps_nsit = config.eps_nsit * fn_;
            let threshold = detect_threshold(
                &scan.sigma_values,
                &scan.scaled_derivatives,
                eps_iwm,
                scan.d_eff,
            );
            let v = match (threshold, nsit) {
                (Some(t), Some(r)) if sigma_a >= t => {
                    match nsit_verdict(r.scaled_residual, r.factorization_gap, eps_nsit) {
                        NsitVerdict::Holds => Verdict::Macrorealistic,
                        NsitVerdict::Violated => Verdict::NonMacrorealistic,
                    }
                }
                _ => Verdict::Inconclusive,
            };
            entries.push(StabilityEntry {
                eps_iwm,
                eps_nsit,
                verdict: v,
            });
        }
    }
    let stable = entries.iter().all(|e| e.verdict == verdict);
    VerdictStability { entries, stable }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
        return Err(Error::invalid(
            "log-spaced grid needs 0 < lo < hi and at least 2 points",
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect())
}
