//! Number formatting for CSV and text output.

/// Formats `x` like C's `%.9g`: 9 significant digits, trailing zeros
/// dropped, exponent form outside `1e-4 <= |x| < 1e9`.
pub fn g9(x: f64) -> String {
    g(x, 9)
}

/// `%.{digits}g`.
pub fn g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let digits = digits.max(1);
    // exponent after rounding to `digits` significant digits
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `10 log10(x)`.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// `10^(db / 10)`.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        // reference strings from printf("%.9g")
        let cases = [
            (0.144517, "0.144517"),
            (1.0, "1"),
            (100.0, "100"),
            (-0.938381543, "-0.938381543"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (999999999.5, "1e+09"),
            (2.0f64.sqrt(), "1.41421356"),
            (-2.5e300, "-2.5e+300"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(g9(x), want, "{x}");
        }
        assert_eq!(g(0.5318, 3), "0.532");
    }

    #[test]
    fn db_round_trip() {
        for db in [-10.0, 0.0, 3.0, 30.0, 60.0] {
            assert!((to_db(from_db(db)) - db).abs() < 1e-12);
        }
        assert_eq!(from_db(20.0), 100.0);
    }

    proptest! {
        #[test]
        fn nine_digits_survive_parsing(x in -1e12f64..1e12, e in -300i32..300) {
            let v = x * 10f64.powi(e);
            prop_assume!(v.is_finite() && v != 0.0);
            let back: f64 = g9(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-9 * v.abs(), "{} -> {}", v, g9(v));
        }
    }
}
