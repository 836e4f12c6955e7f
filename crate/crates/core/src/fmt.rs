//! Deterministic number formatting for reports: 9 significant digits.

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to 9 significant digits; the result prints identically on every
/// platform through the shortest round-trip representation.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Plain decimal rendering of `round_sig(x)`, without exponent for
/// magnitudes in `[1e-6, 1e15)`.
pub fn format_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".to_string();
    }
    if !r.is_finite() {
        return r.to_string();
    }
    let mag = r.abs();
    if (1e-6..1e15).contains(&mag) {
        let exponent = mag.log10().floor() as i32;
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
        let s = format!("{:.*}", decimals, r);
        trim_zeros(&s)
    } else {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, r)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(format_sig(0.5099407093782345), "0.509940709");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(-0.25), "-0.25");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(123456.789012), "123456.789");
        assert_eq!(round_sig(std::f64::consts::FRAC_1_SQRT_2).to_string(), "0.707106781");
    }
}
