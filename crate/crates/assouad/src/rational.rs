//! Arbitrary-precision rational helpers: parsing, f64 conversion, logarithms.

use crate::{Error, Result};
use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, Zero};

/// Parse a rational from "p/q", an integer string, or a plain decimal like "0.25".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |_| Error::InvalidParam(format!("cannot parse rational from {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(bad)?;
        let d: BigInt = den.trim().parse().map_err(bad)?;
        if d.is_zero() {
            return Err(Error::InvalidParam(format!("zero denominator in {s:?}")));
        }
        Ok(BigRational::new(n, d))
    } else if let Some((int, frac)) = s.split_once('.') {
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(bad)?
        };
        let digits: BigInt = frac.parse().map_err(bad)?;
        if digits.is_negative() {
            return Err(Error::InvalidParam(format!("malformed decimal {s:?}")));
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(digits, scale);
        let whole = BigRational::from(int_part);
        Ok(if s.starts_with('-') { whole - frac_part } else { whole + frac_part })
    } else {
        let n: BigInt = s.parse().map_err(bad)?;
        Ok(BigRational::from(n))
    }
}

/// Render as "p/q" (or "p" for integers), the wire format used everywhere.
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn bigint_to_f64_scaled(n: &BigInt) -> (f64, i64) {
    // Returns (m, e) with n ~= m * 2^e and m in a f64-safe range.
    let bits = n.bits();
    if bits <= 52 {
        return (n.to_string().parse::<f64>().unwrap_or(0.0), 0);
    }
    let shift = bits - 52;
    let top: BigInt = n >> shift;
    let m = i64::try_from(&top).map(|v| v as f64).unwrap_or(0.0);
    (m, shift as i64)
}

/// Convert to f64 without overflowing on huge numerators/denominators.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let (mn, en) = bigint_to_f64_scaled(q.numer());
    let (md, ed) = bigint_to_f64_scaled(q.denom());
    let e = en - ed;
    if e.abs() > 4000 {
        // Beyond f64 range either way.
        return if e > 0 { f64::INFINITY * mn.signum() } else { 0.0 };
    }
    (mn / md) * 2f64.powi(e as i32)
}

/// Natural log of a positive rational, safe for numbers far outside f64 range.
pub fn ln_rational(q: &BigRational) -> f64 {
    assert!(q.is_positive(), "ln of non-positive rational");
    let (mn, en) = bigint_to_f64_scaled(q.numer());
    let (md, ed) = bigint_to_f64_scaled(q.denom());
    mn.ln() - md.ln() + ((en - ed) as f64) * std::f64::consts::LN_2
}

/// 2^-k as a rational.
pub fn pow2_inv(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// base^-k as a rational for integer base >= 2.
pub fn pow_inv(base: u32, k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(base).pow(k))
}

/// Sign of a rational as -1/0/+1.
pub fn sign(q: &BigRational) -> i8 {
    match q.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_integer_and_decimal() {
        assert_eq!(parse_rational("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(parse_rational("-7").unwrap(), BigRational::from(BigInt::from(-7)));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn f64_and_ln_handle_huge_values() {
        let tiny = pow2_inv(2000);
        assert_eq!(rational_to_f64(&tiny), 0.0);
        let ln = ln_rational(&tiny);
        assert!((ln - (-2000.0 * std::f64::consts::LN_2)).abs() < 1e-6);
        let q = BigRational::new(3.into(), 7.into());
        assert!((rational_to_f64(&q) - 3.0 / 7.0).abs() < 1e-15);
        assert!((ln_rational(&q) - (3f64 / 7.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn round_trips_strings() {
        for s in ["3/4", "-13/8", "5"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(rational_to_string(&q), s);
        }
    }
}
