/// Significant digits used for CSV columns.
pub const CSV_DIGITS: usize = 17;

/// Formats `x` with `digits` significant digits. Magnitudes in `[1e-5, 10^digits)`
/// print in positional notation, others in scientific notation. The decimal
/// separator is always `.`.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.clamp(1, 17);
    let scientific = format!("{:.*e}", digits - 1, x);
    let exponent: i32 = scientific
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if x != 0.0 && (exponent < -5 || exponent >= digits as i32) {
        scientific
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    }
}
