//! Versioned JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use macroreal::protocol::{DEFAULT_EPS_IWM, DEFAULT_EPS_NSIT};
use macroreal::KineticScheme;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    pub times: TimesConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    DoubleWell {
        omega0: f64,
        alpha: f64,
        #[serde(default = "unit")]
        barrier_height: f64,
        grid: GridConfig,
        #[serde(default)]
        kinetic: KineticScheme,
    },
    Harmonic {
        omega0: f64,
        grid: GridConfig,
        #[serde(default)]
        kinetic: KineticScheme,
    },
    /// Matrices and state in a JSON file, path relative to the config file.
    ExplicitMatrix { file: PathBuf },
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Lowest energy eigenstate.
    Ground,
    /// Energy eigenstate with this index.
    Level(usize),
    /// Eigenstate of the first observable with this index.
    AEigenstate(usize),
    /// The state stored in the explicit-matrix file.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    Values(Vec<f64>),
    LogSpaced {
        min: f64,
        max: f64,
        per_decade: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaUnits {
    /// Atomic units of the measured observable.
    #[default]
    Au,
    /// Multiples of d_eff of the first observable in the initial state.
    DEff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub sigma: SigmaSpec,
    #[serde(default)]
    pub sigma_units: SigmaUnits,
    /// Add the projective (σ → 0) and ideally weak (σ → ∞) limits to traces.
    #[serde(default = "yes")]
    pub include_limits: bool,
    /// Second-measurement coupling for distributions and the protocol, in
    /// `sigma_units`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_b: Option<f64>,
    /// First-measurement coupling of the NSIT test, in `sigma_units`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_a_nsit: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            sigma: SigmaSpec::LogSpaced {
                min: 0.1,
                max: 100.0,
                per_decade: 9,
            },
            sigma_units: SigmaUnits::DEff,
            include_limits: true,
            sigma_b: None,
            sigma_a_nsit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    #[serde(default)]
    pub t: f64,
    pub tau: TauSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TauSpec {
    Values(Vec<f64>),
    PiMultiples(Vec<f64>),
    Uniform { start: f64, step: f64, count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: Vec<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { n: vec![1] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_eps_iwm")]
    pub eps_iwm: f64,
    #[serde(default = "default_eps_nsit")]
    pub eps_nsit: f64,
    /// Maximum relative discrepancy accepted by `--oracle`.
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
}

fn default_eps_iwm() -> f64 {
    DEFAULT_EPS_IWM
}

fn default_eps_nsit() -> f64 {
    DEFAULT_EPS_NSIT
}

fn default_quadrature() -> f64 {
    1e-6
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            eps_iwm: DEFAULT_EPS_IWM,
            eps_nsit: DEFAULT_EPS_NSIT,
            quadrature: default_quadrature(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Frequency axis unit; defaults to ω0 for oscillators and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_unit: Option<f64>,
    #[serde(default = "default_zero_pad")]
    pub zero_pad: usize,
}

fn default_zero_pad() -> usize {
    16
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            frequency_unit: None,
            zero_pad: default_zero_pad(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub directory: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_out(),
        }
    }
}

/// A parsed configuration together with its source text and location.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub text: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("{}: cannot read config: {e}", path.display()))
        })?;
        let config =
            parse(&text).map_err(|m| CliError::Config(format!("{}:{m}", path.display())))?;
        Ok(LoadedConfig {
            config,
            path: path.to_path_buf(),
            text,
        })
    }

    /// Resolves a path given in the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn config_error(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = anchor_line(&self.text, key)
            .map(|l| format!("{l}:"))
            .unwrap_or_default();
        CliError::Config(format!("{}:{line} `{key}`: {msg}", self.path.display()))
    }
}

/// Parses and validates; errors carry `line:column` of the offending token.
pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))?;
    validate(&config).map_err(|(key, msg)| {
        let line = anchor_line(text, key)
            .map(|l| format!("{l}:"))
            .unwrap_or_default();
        format!("{line} `{key}`: {msg}")
    })?;
    Ok(config)
}

/// 1-based line of the first occurrence of `"key"`.
fn anchor_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

fn positive(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((key, format!("must be positive and finite, got {v}")))
    }
}

pub fn validate(c: &ExperimentConfig) -> Result<(), (&'static str, String)> {
    if c.schema_version != SCHEMA_VERSION {
        return Err((
            "schema_version",
            format!(
                "unsupported version {} (expected {SCHEMA_VERSION})",
                c.schema_version
            ),
        ));
    }
    match &c.system {
        SystemConfig::DoubleWell {
            omega0,
            alpha,
            barrier_height,
            grid,
            ..
        } => {
            positive("omega0", *omega0)?;
            positive("alpha", *alpha)?;
            if !(*barrier_height >= 0.0 && barrier_height.is_finite()) {
                return Err((
                    "barrier_height",
                    format!("must be non-negative, got {barrier_height}"),
                ));
            }
            validate_grid(grid)?;
        }
        SystemConfig::Harmonic { omega0, grid, .. } => {
            positive("omega0", *omega0)?;
            validate_grid(grid)?;
        }
        SystemConfig::ExplicitMatrix { .. } => {}
    }
    match &c.measurement.sigma {
        SigmaSpec::Values(v) => {
            if v.is_empty() {
                return Err(("sigma", "list must not be empty".into()));
            }
            for &s in v {
                positive("sigma", s)?;
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(("sigma", "list must be strictly increasing".into()));
            }
        }
        SigmaSpec::LogSpaced {
            min,
            max,
            per_decade,
        } => {
            positive("min", *min)?;
            positive("max", *max)?;
            if max <= min {
                return Err(("max", format!("must exceed min ({min})")));
            }
            if *per_decade == 0 {
                return Err(("per_decade", "must be at least 1".into()));
            }
        }
    }
    if let Some(s) = c.measurement.sigma_b {
        positive("sigma_b", s)?;
    }
    if let Some(s) = c.measurement.sigma_a_nsit {
        positive("sigma_a_nsit", s)?;
    }
    if !c.times.t.is_finite() {
        return Err(("t", "must be finite".into()));
    }
    match &c.times.tau {
        TauSpec::Values(v) | TauSpec::PiMultiples(v) => {
            if v.is_empty() {
                return Err(("tau", "list must not be empty".into()));
            }
            if v.iter().any(|t| !t.is_finite()) {
                return Err(("tau", "values must be finite".into()));
            }
        }
        TauSpec::Uniform { start, step, count } => {
            if !start.is_finite() {
                return Err(("start", "must be finite".into()));
            }
            positive("step", *step)?;
            if *count == 0 {
                return Err(("count", "must be at least 1".into()));
            }
        }
    }
    if c.ensemble.n.is_empty() || c.ensemble.n.contains(&0) {
        return Err((
            "n",
            "ensemble sizes must be positive and the list non-empty".into(),
        ));
    }
    if c.ensemble.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(("n", "ensemble sizes must be strictly increasing".into()));
    }
    positive("eps_iwm", c.tolerances.eps_iwm)?;
    positive("eps_nsit", c.tolerances.eps_nsit)?;
    positive("quadrature", c.tolerances.quadrature)?;
    if let Some(u) = c.spectrum.frequency_unit {
        positive("frequency_unit", u)?;
    }
    if c.spectrum.zero_pad == 0 {
        return Err(("zero_pad", "must be at least 1".into()));
    }
    Ok(())
}

fn validate_grid(g: &GridConfig) -> Result<(), (&'static str, String)> {
    if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max) {
        return Err((
            "x_min",
            format!("need finite x_min < x_max, got [{}, {}]", g.x_min, g.x_max),
        ));
    }
    if g.n_points < 8 {
        return Err((
            "n_points",
            format!("need at least 8 points, got {}", g.n_points),
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    /// σ values in the configured units.
    pub fn sigma_values(&self) -> Vec<f64> {
        match &self.measurement.sigma {
            SigmaSpec::Values(v) => v.clone(),
            SigmaSpec::LogSpaced {
                min,
                max,
                per_decade,
            } => {
                let decades = (max / min).log10();
                let count = (decades * *per_decade as f64).round() as usize + 1;
                macroreal::protocol::log_spaced(*min, *max, count.max(2)).expect("validated range")
            }
        }
    }

    pub fn tau_values(&self) -> Vec<f64> {
        match &self.times.tau {
            TauSpec::Values(v) => v.clone(),
            TauSpec::PiMultiples(v) => v.iter().map(|m| m * std::f64::consts::PI).collect(),
            TauSpec::Uniform { start, step, count } => {
                (0..*count).map(|k| start + *step * k as f64).collect()
            }
        }
    }
}
