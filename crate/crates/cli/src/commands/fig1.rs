use std::fmt::Write as _;

use serde::Serialize;

use macroreal::spectrum::{autocorrelation_spectrum_with, uniform_spacing, SpectrumOptions};
use macroreal::{correlation_csv, fmt_f64, Coupling};

use super::correlate::{couplings, traces};
use super::{Prepared, RunOptions};
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputSet;

#[derive(Clone, Debug, Serialize)]
pub struct PeakEntry {
    /// `projective`, `finite` or `ideally_weak`.
    pub coupling: &'static str,
    /// σ in atomic units for finite couplings.
    pub sigma: Option<f64>,
    /// Dominant peak in units of `frequency_unit`.
    pub peak: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Fig1Summary {
    pub frequency_unit: f64,
    pub bin_width: f64,
    pub tau_spacing: f64,
    pub samples: usize,
    pub peaks: Vec<PeakEntry>,
    pub projective_peak: Option<f64>,
    pub ideally_weak_peak: Option<f64>,
    /// Peak location non-decreasing from σ → 0 to σ → ∞, up to one bin.
    pub peaks_monotonic: bool,
}

fn sigma_label(c: Coupling) -> String {
    match c {
        Coupling::Projective => fmt_f64(0.0),
        Coupling::Finite(s) => fmt_f64(s),
        Coupling::IdeallyWeak => "inf".into(),
    }
}

pub fn run(
    cfg: &LoadedConfig,
    p: &Prepared,
    opts: &RunOptions,
    out: &mut OutputSet,
) -> Result<(), CliError> {
    let c = &cfg.config;
    let taus = c.tau_values();
    let dtau = uniform_spacing(&taus).map_err(|e| cfg.config_error("tau", e))?;
    let sigmas = p.sigma_to_au(cfg, &c.sigma_values())?;
    let cs = couplings(&sigmas, true);
    let rows = out.timed("traces", || traces(p, &cs, &taus, opts.workers))?;
    out.add("fig1_traces.csv", correlation_csv(&rows.concat()));

    let frequency_unit = c.spectrum.frequency_unit.or(p.omega0).unwrap_or(1.0);
    let sopts = SpectrumOptions {
        frequency_unit,
        zero_pad: c.spectrum.zero_pad,
        ..Default::default()
    };
    let mut csv = String::from("sigma,omega_over_omega0,power\n");
    let mut peaks = Vec::with_capacity(cs.len());
    let mut bin_width = 0.0;
    out.timed("spectra", || -> Result<(), CliError> {
        for (coupling, trace) in cs.iter().zip(&rows) {
            let values: Vec<f64> = trace.iter().map(|r| r.value).collect();
            let report = autocorrelation_spectrum_with(&values, dtau, &sopts)?;
            bin_width = report.bin_width;
            let label = sigma_label(*coupling);
            let norm = report.normalized();
            for (w, pw) in norm.frequencies.iter().zip(&norm.power) {
                let _ = writeln!(csv, "{label},{},{}", fmt_f64(*w), fmt_f64(*pw));
            }
            let (kind, sigma) = match coupling {
                Coupling::Projective => ("projective", None),
                Coupling::Finite(s) => ("finite", Some(*s)),
                Coupling::IdeallyWeak => ("ideally_weak", None),
            };
            peaks.push(PeakEntry {
                coupling: kind,
                sigma,
                peak: report.dominant_peak(2.0 * report.bin_width),
            });
        }
        Ok(())
    })?;
    out.add("fig1_spectrum.csv", csv);

    let located: Vec<f64> = peaks.iter().filter_map(|p| p.peak).collect();
    let summary = Fig1Summary {
        frequency_unit,
        bin_width,
        tau_spacing: dtau,
        samples: taus.len(),
        projective_peak: peaks.first().and_then(|p| p.peak),
        ideally_weak_peak: peaks.last().and_then(|p| p.peak),
        peaks_monotonic: located.len() == peaks.len()
            && located.windows(2).all(|w| w[1] >= w[0] - bin_width),
        peaks,
    };
    out.add_json("fig1_summary.json", &summary);
    Ok(())
}
