//! Float formatting shared by all CSV and report writers.

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// 12 significant digits, used in human-readable reports.
pub fn fmt_report(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn join_f64(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
