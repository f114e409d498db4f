//! Text formatting shared by every CSV and report writer.

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    format_g(x, 12)
}

/// `%.{precision}g` formatting: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Rounds to `decimals` places with halves going away from zero, the way a
/// value is rounded by hand. Binary representation error is absorbed by
/// treating anything within `1e-9` (in units of the last place) of a half
/// as a half, so `0.475` rounds to `0.48`.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let scaled = x * scale;
    (scaled + 1e-9f64.copysign(scaled)).round() / scale
}

/// [`round_half_up`] printed with exactly `decimals` places.
pub fn fixed_half_up(x: f64, decimals: usize) -> String {
    format!("{:.*}", decimals, round_half_up(x, decimals as i32))
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
