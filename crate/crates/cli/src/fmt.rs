//! Deterministic number formatting for curve files and reports.

/// Formats `v` with exactly 9 significant decimal digits, using plain decimal
/// notation when the exponent is moderate and scientific notation otherwise
/// (the classic `%g` switch, but without trailing-zero stripping so column
/// widths stay stable).
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // `{:.8e}` renders one leading digit plus 8 decimals: d.dddddddde<exp>.
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent value");
    if !(-4..9).contains(&exp) {
        return sci;
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = (exp + 1) as usize;
        out.push_str(&digits[..point]);
        out.push('.');
        out.push_str(&digits[point..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits_fixed_range() {
        assert_eq!(sig9(0.25), "0.250000000");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(-3.5), "-3.50000000");
        assert_eq!(sig9(123456789.0), "123456789.");
        assert_eq!(sig9(0.000123456789), "0.000123456789");
    }

    #[test]
    fn scientific_outside_fixed_range() {
        assert_eq!(sig9(1.23456789e9), "1.23456789e9");
        assert_eq!(sig9(1e-5), "1.00000000e-5");
    }

    #[test]
    fn zero_and_rounding() {
        assert_eq!(sig9(0.0), "0.00000000");
        // Tenth digit rounds into the ninth.
        assert_eq!(sig9(0.1234567896), "0.123456790");
    }
}
