/// Shortest round-trip-safe scientific notation: 17 significant digits,
/// `.` decimal separator, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
