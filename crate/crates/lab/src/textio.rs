//! Text formatting helpers for the file interfaces.
//!
//! All floating-point fields in the text formats are written with `%.17g`
//! semantics: 17 significant digits, fixed or scientific notation chosen the
//! way C's `%g` does, trailing zeros stripped. 17 significant decimal digits
//! are enough to reproduce any binary64 value exactly on re-parse.

/// Formats `v` like C's `printf("%.17g", v)`.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".to_string() } else { "0".to_string() };
    }

    // Decimal exponent of the value rounded to 17 significant digits.
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");

    if exp >= -4 && exp < 17 {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_fixed(&fixed)
    } else {
        let mantissa = trim_fixed(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", mantissa, sign, exp.abs())
    }
}

fn trim_fixed(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Parses a float written by [`fmt_g17`].
pub fn parse_g17(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}
