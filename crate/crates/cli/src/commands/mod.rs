//! Subcommand implementations and the shared system set-up.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use macroreal::correlation::DEFAULT_OCCUPATION_THRESHOLD;
use macroreal::{
    diagonalize, effective_dimension, evolve, Basis, CMat, DoubleWell, HermitianObservable,
    OscillatorSystem, Propagator, QuantumState, SpatialGrid, SystemFixture, C64,
};

use crate::config::{GridConfig, InitialState, LoadedConfig, SigmaUnits, SystemConfig};
use crate::error::CliError;
use crate::output::{sha256_hex, OutputFile};

pub mod correlate;
pub mod eigensolve;
pub mod fig1;
pub mod fig2;
pub mod protocol;

/// Per-invocation settings from the command line.
pub struct RunOptions {
    pub oracle: bool,
    pub workers: usize,
}

/// A fully built physical system ready for the measurement modules.
pub struct Prepared {
    pub fixture: SystemFixture,
    /// Oscillator frequency, if the system has one.
    pub omega0: Option<f64>,
    /// d_eff of A in the initial state.
    pub d_eff: f64,
    /// Checksums of auxiliary input files.
    pub inputs: Vec<OutputFile>,
}

impl Prepared {
    pub fn energies(&self) -> Result<&[f64], CliError> {
        Ok(self.fixture.hamiltonian.eigenvalues()?)
    }

    /// Converts configured σ values (in `units`) to atomic units.
    pub fn sigma_to_au(&self, cfg: &LoadedConfig, values: &[f64]) -> Result<Vec<f64>, CliError> {
        let factor = self.sigma_factor(cfg)?;
        Ok(values.iter().map(|s| s * factor).collect())
    }

    pub fn sigma_factor(&self, cfg: &LoadedConfig) -> Result<f64, CliError> {
        match cfg.config.measurement.sigma_units {
            SigmaUnits::Au => Ok(1.0),
            SigmaUnits::DEff if self.d_eff > 0.0 => Ok(self.d_eff),
            SigmaUnits::DEff => Err(cfg.config_error(
                "sigma_units",
                "d_eff of the initial state is zero (eigenstate of A); give σ in \"au\"",
            )),
        }
    }
}

fn spatial_grid(g: &GridConfig) -> Result<SpatialGrid, CliError> {
    Ok(SpatialGrid::new(g.x_min, g.x_max, g.n_points)?)
}

pub fn prepare(cfg: &LoadedConfig) -> Result<Prepared, CliError> {
    let c = &cfg.config;
    let initial = c.initial_state.clone();
    let (state, a, b, h, omega0, inputs) = match &c.system {
        SystemConfig::DoubleWell {
            omega0,
            alpha,
            barrier_height,
            grid,
            kinetic,
        } => {
            let params = DoubleWell {
                omega0: *omega0,
                alpha: *alpha,
                barrier_height: *barrier_height,
            };
            let sys = OscillatorSystem::double_well(spatial_grid(grid)?, &params, *kinetic)?;
            let state = oscillator_state(cfg, &sys, initial.unwrap_or(InitialState::Ground))?;
            let x = sys.position().clone();
            (
                state,
                x.clone(),
                x,
                sys.hamiltonian().clone(),
                Some(*omega0),
                Vec::new(),
            )
        }
        SystemConfig::Harmonic {
            omega0,
            grid,
            kinetic,
        } => {
            let sys = OscillatorSystem::harmonic(spatial_grid(grid)?, *omega0, *kinetic)?;
            let state = oscillator_state(cfg, &sys, initial.unwrap_or(InitialState::Ground))?;
            let x = sys.position().clone();
            (
                state,
                x.clone(),
                x,
                sys.hamiltonian().clone(),
                Some(*omega0),
                Vec::new(),
            )
        }
        SystemConfig::ExplicitMatrix { file } => {
            let path = cfg.resolve(file);
            let bytes = std::fs::read(&path)
                .map_err(|e| cfg.config_error("file", format!("{}: {e}", path.display())))?;
            let m = ExplicitModel::parse(&bytes)
                .map_err(|e| cfg.config_error("file", format!("{}: {e}", path.display())))?;
            let input = OutputFile {
                name: file.display().to_string(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
            };
            let (state, a, b, h) = m.build(cfg, initial, &path)?;
            (state, a, b, h, None, vec![input])
        }
    };
    let state = if c.times.t != 0.0 {
        evolve(&state, &Propagator::new(&h, c.times.t)?)?
    } else {
        state
    };
    let d_eff = effective_dimension(&state, &a, DEFAULT_OCCUPATION_THRESHOLD)?.value;
    Ok(Prepared {
        fixture: SystemFixture {
            state,
            a,
            b,
            hamiltonian: h,
        },
        omega0,
        d_eff,
        inputs,
    })
}

fn oscillator_state(
    cfg: &LoadedConfig,
    sys: &OscillatorSystem,
    init: InitialState,
) -> Result<QuantumState, CliError> {
    Ok(match init {
        InitialState::Ground => sys.ground_state().clone(),
        InitialState::Level(n) => sys.level(n)?,
        InitialState::AEigenstate(k) => sys.position().eigenstate(k, 0.0)?,
        InitialState::File => {
            return Err(cfg.config_error(
                "initial_state",
                "\"file\" requires an explicit_matrix system",
            ));
        }
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorJson {
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
}

/// Explicit finite-dimensional model: `{"hamiltonian", "a", "b"?, "state"?}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitModel {
    hamiltonian: MatrixJson,
    a: MatrixJson,
    #[serde(default)]
    b: Option<MatrixJson>,
    #[serde(default)]
    state: Option<VectorJson>,
}

impl MatrixJson {
    fn to_cmat(&self) -> Result<CMat, String> {
        let n = self.re.len();
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().zip(&self.re).any(|(a, b)| a.len() != b.len()) {
                return Err("`im` shape differs from `re`".into());
            }
        }
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..self.re[i].len())
                    .map(|j| C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |m| m[i][j])))
                    .collect()
            })
            .collect();
        CMat::from_rows(&rows).map_err(|e| e.to_string())
    }
}

impl ExplicitModel {
    fn parse(bytes: &[u8]) -> Result<Self, String> {
        serde_json::from_slice(bytes).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))
    }

    fn build(
        &self,
        cfg: &LoadedConfig,
        initial: Option<InitialState>,
        path: &Path,
    ) -> Result<
        (
            QuantumState,
            HermitianObservable,
            HermitianObservable,
            HermitianObservable,
        ),
        CliError,
    > {
        let bad = |key: &str, msg: String| {
            cfg.config_error("file", format!("{}: `{key}`: {msg}", path.display()))
        };
        let hm = self
            .hamiltonian
            .to_cmat()
            .map_err(|e| bad("hamiltonian", e))?;
        let n = hm.nrows();
        if hm.ncols() != n || n == 0 {
            return Err(bad(
                "hamiltonian",
                format!("must be square and non-empty, got {}×{}", n, hm.ncols()),
            ));
        }
        let basis = Basis::Computational(n);
        let h = diagonalize(&HermitianObservable::dense("H", hm, basis.clone())?)?;
        let am = self.a.to_cmat().map_err(|e| bad("a", e))?;
        let a = diagonalize(&HermitianObservable::dense("A", am, basis.clone())?)?;
        let b = match &self.b {
            Some(m) => diagonalize(&HermitianObservable::dense(
                "B",
                m.to_cmat().map_err(|e| bad("b", e))?,
                basis.clone(),
            )?)?,
            None => a.clone(),
        };
        let default = if self.state.is_some() {
            InitialState::File
        } else {
            InitialState::Ground
        };
        let state = match initial.unwrap_or(default) {
            InitialState::File => {
                let v = self
                    .state
                    .as_ref()
                    .ok_or_else(|| bad("state", "missing".into()))?;
                if v.im.as_ref().is_some_and(|im| im.len() != v.re.len()) {
                    return Err(bad("state", "`im` length differs from `re`".into()));
                }
                let amps = (0..v.re.len())
                    .map(|k| C64::new(v.re[k], v.im.as_ref().map_or(0.0, |m| m[k])))
                    .collect();
                QuantumState::normalized(amps, basis, 0.0)?
            }
            InitialState::Ground => h.eigenstate(0, 0.0)?,
            InitialState::Level(k) => h.eigenstate(k, 0.0)?,
            InitialState::AEigenstate(k) => a.eigenstate(k, 0.0)?,
        };
        Ok((state, a, b, h))
    }
}

/// Runs `f` over `items` on a pool of `workers` threads, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(
    workers: usize,
    items: &[T],
    f: impl Fn(&T) -> Result<R, CliError> + Sync + Send,
) -> Result<Vec<R>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Single τ required by the figure-2 and protocol commands.
pub fn single_tau(cfg: &LoadedConfig) -> Result<f64, CliError> {
    match cfg.config.tau_values().as_slice() {
        [t] => Ok(*t),
        v => Err(cfg.config_error(
            "tau",
            format!("this command needs exactly one τ, got {}", v.len()),
        )),
    }
}
