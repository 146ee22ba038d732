use macroreal::{run_protocol, ProtocolConfig};

use super::{single_tau, Prepared};
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputSet;

pub fn run(cfg: &LoadedConfig, p: &Prepared, out: &mut OutputSet) -> Result<(), CliError> {
    let c = &cfg.config;
    let n = match c.ensemble.n.as_slice() {
        [n] => *n,
        v => {
            return Err(cfg.config_error(
                "n",
                format!(
                    "the protocol needs exactly one ensemble size, got {}",
                    v.len()
                ),
            ))
        }
    };
    let factor = p.sigma_factor(cfg)?;
    let config = ProtocolConfig {
        sigma_values: p.sigma_to_au(cfg, &c.sigma_values())?,
        tau: single_tau(cfg)?,
        n,
        sigma_b: c.measurement.sigma_b.map(|s| s * factor),
        sigma_a: c.measurement.sigma_a_nsit.map(|s| s * factor),
        eps_iwm: c.tolerances.eps_iwm,
        eps_nsit: c.tolerances.eps_nsit,
    };
    let report = out.timed("protocol", || run_protocol(&p.fixture, &config))?;
    out.add("protocol_delta.csv", report.delta.to_csv());
    out.add_json("protocol_report.json", &report);
    Ok(())
}
