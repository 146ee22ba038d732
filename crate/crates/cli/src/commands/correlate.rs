use std::fmt::Write as _;

use macroreal::correlation::Method;
use macroreal::{
    correlation_brute_force, correlation_csv, fmt_f64, joint_distribution, CorrelationResult,
    Coupling, MeasurementModel, Propagator, TraceEngine, TwoTimeSystem, CORRELATION_TAIL,
};

use super::{parallel_map, Prepared, RunOptions};
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputSet;

/// Couplings of a trace sweep: projective limit, finite σ ascending, ideally weak limit.
pub fn couplings(sigmas_au: &[f64], include_limits: bool) -> Vec<Coupling> {
    let mut c = Vec::with_capacity(sigmas_au.len() + 2);
    if include_limits {
        c.push(Coupling::Projective);
    }
    c.extend(sigmas_au.iter().map(|&s| Coupling::Finite(s)));
    if include_limits {
        c.push(Coupling::IdeallyWeak);
    }
    c
}

/// One trace per coupling, in the order of `couplings`.
pub fn traces(
    p: &Prepared,
    couplings: &[Coupling],
    taus: &[f64],
    workers: usize,
) -> Result<Vec<Vec<CorrelationResult>>, CliError> {
    let f = &p.fixture;
    let engine = TraceEngine::new(&f.state, &f.a, &f.b, &f.hamiltonian, CORRELATION_TAIL)?;
    parallel_map(workers, couplings, |c| Ok(engine.trace(*c, taus)?))
}

pub fn run(
    cfg: &LoadedConfig,
    p: &Prepared,
    opts: &RunOptions,
    out: &mut OutputSet,
) -> Result<(), CliError> {
    let c = &cfg.config;
    let taus = c.tau_values();
    let sigmas = p.sigma_to_au(cfg, &c.sigma_values())?;
    let sigma_b = c
        .measurement
        .sigma_b
        .map(|s| s * p.sigma_factor(cfg).unwrap_or(1.0));
    for &n in &c.ensemble.n {
        let name = if n == 1 {
            "correlation.csv".to_string()
        } else {
            format!("correlation_n{n}.csv")
        };
        let rows: Vec<CorrelationResult> = if n == 1 {
            let cs = couplings(&sigmas, c.measurement.include_limits);
            out.timed(&format!("traces_n{n}"), || {
                traces(p, &cs, &taus, opts.workers)
            })?
            .concat()
        } else {
            out.timed(&format!("traces_n{n}"), || {
                collective_rows(p, &sigmas, &taus, n, opts.workers)
            })?
        };
        let csv = if opts.oracle && n == 1 {
            let tol = c.tolerances.quadrature;
            out.timed("oracle", || {
                with_oracle(p, &rows, sigma_b, tol, opts.workers)
            })?
        } else {
            correlation_csv(&rows)
        };
        out.add(&name, csv);
    }
    Ok(())
}

fn collective_rows(
    p: &Prepared,
    sigmas: &[f64],
    taus: &[f64],
    n: usize,
    workers: usize,
) -> Result<Vec<CorrelationResult>, CliError> {
    let f = &p.fixture;
    let per_tau = parallel_map(workers, taus, |&tau| {
        let prop = Propagator::new(&f.hamiltonian, tau)?;
        let sys = TwoTimeSystem::prepare(&f.state, &f.a, &f.b, &prop, CORRELATION_TAIL)?;
        Ok(sigmas
            .iter()
            .map(|&s| sys.collective(s, n))
            .collect::<Vec<_>>())
    })?;
    // Same row order as the single-particle traces: σ-major, τ-minor.
    let mut rows = Vec::with_capacity(sigmas.len() * taus.len());
    for k in 0..sigmas.len() {
        rows.extend(per_tau.iter().map(|r| r[k].clone()));
    }
    Ok(rows)
}

/// Appends `brute_force,relative_discrepancy`; limit rows leave both empty.
fn with_oracle(
    p: &Prepared,
    rows: &[CorrelationResult],
    sigma_b: Option<f64>,
    tolerance: f64,
    workers: usize,
) -> Result<String, CliError> {
    let f = &p.fixture;
    let brute = parallel_map(workers, rows, |r| {
        if r.method != Method::ClosedForm {
            return Ok(None);
        }
        let sa = r.sigma_a.expect("closed-form rows carry σ");
        let ma = MeasurementModel::new(&f.a, sa)?;
        let mb = MeasurementModel::new(&f.b, sigma_b.unwrap_or(sa))?;
        let prop = Propagator::new(&f.hamiltonian, r.tau)?;
        let joint = joint_distribution(&f.state, &ma, &prop, &mb)?;
        let bf = correlation_brute_force(&joint).value;
        let rel = (bf - r.value).abs() / r.value.abs().max(f64::MIN_POSITIVE);
        Ok(Some((bf, rel)))
    })?;
    let base = correlation_csv(rows);
    let mut lines = base.lines();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{},brute_force,relative_discrepancy",
        lines.next().unwrap_or_default()
    );
    let mut worst = 0.0f64;
    for (line, b) in lines.zip(&brute) {
        match b {
            Some((bf, rel)) => {
                worst = worst.max(*rel);
                let _ = writeln!(s, "{line},{},{}", fmt_f64(*bf), fmt_f64(*rel));
            }
            None => {
                let _ = writeln!(s, "{line},,");
            }
        }
    }
    if worst > tolerance {
        eprintln!("warning: oracle relative discrepancy {worst:.3e} exceeds quadrature tolerance {tolerance:.1e}");
    }
    Ok(s)
}
