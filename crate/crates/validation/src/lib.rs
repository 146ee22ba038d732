//! Runner for the acceptance suite: each criterion is timed, checked against
//! its runtime budget and reported on one `PASS`/`FAIL` line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

/// What a criterion measured: whether it holds and a one-line summary.
pub struct Check {
    pub holds: bool,
    pub detail: String,
}

impl Check {
    pub fn new(holds: bool, detail: impl Into<String>) -> Self {
        Check {
            holds,
            detail: detail.into(),
        }
    }
}

pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
}

/// Runs `f`, prints the verdict line and returns it. A panic counts as a
/// failure; so does exceeding `budget_seconds`.
pub fn criterion(
    name: &'static str,
    budget_seconds: Option<f64>,
    f: impl FnOnce() -> Check,
) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let seconds = start.elapsed().as_secs_f64();
    let (holds, detail) = match result {
        Ok(c) => (c.holds, c.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_budget = budget_seconds.is_none_or(|b| seconds < b);
    let passed = holds && in_budget;
    let timing = match budget_seconds {
        Some(b) => format!(
            "{seconds:.1} s of {b:.0} s{}",
            if in_budget { "" } else { ", over budget" }
        ),
        None => format!("{seconds:.1} s"),
    };
    println!(
        "{} {name}: {detail} [{timing}]",
        if passed { "PASS" } else { "FAIL" }
    );
    Outcome { name, passed }
}

/// Prints the tally; the exit status is non-zero if any criterion failed.
pub fn summarize(outcomes: &[Outcome]) -> std::process::ExitCode {
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    println!(
        "acceptance: {} passed, {} failed",
        outcomes.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        std::process::ExitCode::FAILURE
    }
}
