//! Number formatting for tables.

/// Formats `x` with at least `nsmall` decimals.
///
/// With `digits == 0` the value is printed fixed-point with exactly `nsmall`
/// decimals. With `digits > 0` enough decimals are kept to show `digits`
/// significant digits, and never fewer than `nsmall`.
pub fn format_number(x: f64, nsmall: usize, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf" } else { "-Inf" }.into();
    }
    let decimals = if digits == 0 || x == 0.0 {
        nsmall
    } else {
        let magnitude = x.abs().log10().floor() as i64;
        (digits as i64 - 1 - magnitude).max(nsmall as i64) as usize
    };
    let s = format!("{x:.decimals$}");
    // "-0.00" reads as a sign error in a table of magnitudes
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}
