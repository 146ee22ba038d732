use serde::{Deserialize, Serialize};

use crate::linalg::C64;

/// Cumulative-population tail dropped from correlation sums.
pub const CORRELATION_TAIL: f64 = 1e-10;

/// Tail dropped when building pointer distributions and conditional states.
pub const DISTRIBUTION_TAIL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub retained: usize,
    pub total: usize,
    /// Population (or bound on the neglected terms) that was cut.
    pub tail: f64,
}

/// Indices (ascending) of the most populated coefficients whose cumulative
/// population reaches `1 - tail` of the total.
pub fn select_support(c: &[C64], tail: f64) -> (Vec<usize>, TruncationReport) {
    let pops: Vec<f64> = c.iter().map(C64::norm_sqr).collect();
    let total: f64 = pops.iter().sum();
    let mut order: Vec<usize> = (0..c.len()).filter(|&i| pops[i] > 0.0).collect();
    order.sort_by(|&i, &j| pops[j].total_cmp(&pops[i]).then(i.cmp(&j)));
    let target = (1.0 - tail) * total;
    let mut acc = 0.0;
    let mut keep = Vec::new();
    for &i in &order {
        if acc >= target && !keep.is_empty() {
            break;
        }
        acc += pops[i];
        keep.push(i);
    }
    let cut = order[keep.len()..]
        .iter()
        .fold(0.0, |acc, &i| acc + pops[i]);
    keep.sort_unstable();
    let dropped = if total > 0.0 { cut / total } else { 0.0 };
    let report = TruncationReport {
        retained: keep.len(),
        total: c.len(),
        tail: dropped,
    };
    (keep, report)
}
