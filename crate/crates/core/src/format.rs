//! Number formatting shared by the CSV and JSON writers.

/// Fixed scientific notation with 12 significant digits.
pub fn sci(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Rounds to 12 significant digits so JSON output is stable across
/// platforms that differ in the last ulp.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    sci(x).parse().unwrap_or(x)
}
