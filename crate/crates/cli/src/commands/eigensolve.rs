use std::fmt::Write as _;

use serde::Serialize;

use macroreal::fmt_f64;

use super::Prepared;
use crate::error::CliError;
use crate::output::OutputSet;

#[derive(Serialize)]
struct EigensolveSummary {
    levels: usize,
    ground_energy: f64,
    omega0: Option<f64>,
    /// E_{n+1} - E_n for the ten lowest gaps, in units of ω0 when known.
    lowest_gaps: Vec<f64>,
}

pub fn run(p: &Prepared, out: &mut OutputSet) -> Result<(), CliError> {
    let e = p.energies()?;
    let mut csv = String::from("index,eigenvalue_au\n");
    for (k, v) in e.iter().enumerate() {
        let _ = writeln!(csv, "{k},{}", fmt_f64(*v));
    }
    out.add("spectrum.csv", csv);
    let unit = p.omega0.unwrap_or(1.0);
    let summary = EigensolveSummary {
        levels: e.len(),
        ground_energy: e[0],
        omega0: p.omega0,
        lowest_gaps: e
            .windows(2)
            .take(10)
            .map(|w| (w[1] - w[0]) / unit)
            .collect(),
    };
    out.add_json("eigensolve_summary.json", &summary);
    Ok(())
}
