use std::fmt::Write as _;

use serde::Serialize;

use macroreal::protocol::{AsymptoticDelta, DecayFit, Region};
use macroreal::{delta_statistic, fmt_f64};

use super::{single_tau, Prepared};
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputSet;

#[derive(Debug, Serialize)]
pub struct Fig2Summary {
    pub tau: f64,
    pub scale: f64,
    pub eps_iwm: f64,
    pub eps_nsit: f64,
    pub asymptotic: Vec<AsymptoticDelta>,
    pub exponential_fit: Option<DecayFit>,
    pub power_law_fit: Option<DecayFit>,
    /// Region of the asymptotic σ at the largest N.
    pub largest_n_region: Option<Region>,
}

pub fn run(cfg: &LoadedConfig, p: &Prepared, out: &mut OutputSet) -> Result<Fig2Summary, CliError> {
    let c = &cfg.config;
    let tau = single_tau(cfg)?;
    let sigmas = p.sigma_to_au(cfg, &c.sigma_values())?;
    let (ei, en) = (c.tolerances.eps_iwm, c.tolerances.eps_nsit);
    let table = out.timed("delta_table", || {
        delta_statistic(&p.fixture, &sigmas, &c.ensemble.n, tau, ei, en)
    })?;
    out.add("fig2_delta.csv", table.to_csv());
    let mut regions = String::from("sigma,N,region\n");
    for e in &table.entries {
        let _ = writeln!(
            regions,
            "{},{},{}",
            fmt_f64(e.sigma),
            e.n,
            e.region.as_str()
        );
    }
    out.add("fig2_regions.csv", regions);
    let summary = Fig2Summary {
        tau,
        scale: table.scale,
        eps_iwm: ei,
        eps_nsit: en,
        largest_n_region: table.asymptotic.last().map(|a| a.region),
        asymptotic: table.asymptotic,
        exponential_fit: table.exponential_fit,
        power_law_fit: table.power_law_fit,
    };
    out.add_json("fig2_summary.json", &summary);
    Ok(summary)
}
