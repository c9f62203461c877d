//! Exact rational data and binary encoding lengths.
//!
//! Encoding lengths follow the usual convention for rationals in lowest
//! terms: `⟨p/q⟩ = 1 + ⌈log₂(|p|+1)⌉ + ⌈log₂(|q|+1)⌉`, and the length of a
//! vector is the sum over its entries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.25"` into an exact
/// rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::input("empty rational literal"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let p: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("bad numerator in {s:?}")))?;
        let q: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::input(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(p));
    }
    parse_decimal(s).ok_or_else(|| Error::input(format!("cannot parse {s:?} as a rational")))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let all = all / BigInt::from(10);
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Exact rational value of a finite double.
pub fn from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::input(format!("{v} is not finite")))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `⌈log₂(v+1)⌉` for `v ≥ 0`, which is the bit length of `v`.
fn ceil_log2_plus_one(v: &BigInt) -> u64 {
    v.abs().bits()
}

/// Encoding length of a rational in lowest terms.
pub fn encoding_length(r: &BigRational) -> u64 {
    // BigRational is kept reduced with a positive denominator.
    1 + ceil_log2_plus_one(r.numer()) + ceil_log2_plus_one(r.denom())
}

pub fn vector_encoding_length(v: &[BigRational]) -> u64 {
    v.iter().map(encoding_length).sum()
}

pub fn is_integral(r: &BigRational) -> bool {
    r.denom().is_one()
}

/// Renders `r` as `"p/q"`, or `"p"` when integral.
pub fn format_rational(r: &BigRational) -> String {
    if is_integral(r) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), q(-4, 1));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5e1").unwrap(), q(-15, 1));
        assert_eq!(parse_rational("2.5e-1").unwrap(), q(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn encoding_lengths() {
        // ⟨0⟩ = 1 + 0 + 1, ⟨1⟩ = 1 + 1 + 1, ⟨1/2⟩ = 1 + 1 + 2, ⟨-3⟩ = 1 + 2 + 1
        assert_eq!(encoding_length(&q(0, 1)), 2);
        assert_eq!(encoding_length(&q(1, 1)), 3);
        assert_eq!(encoding_length(&q(1, 2)), 4);
        assert_eq!(encoding_length(&q(-3, 1)), 4);
        assert_eq!(encoding_length(&q(4, 1)), 5);
        assert_eq!(vector_encoding_length(&[q(1, 1), q(0, 1)]), 5);
    }

    #[test]
    fn f64_round_trip_is_exact() {
        for v in [0.1, -3.75, 1e-300, 12345.678] {
            assert_eq!(to_f64(&from_f64(v).unwrap()), v);
        }
        assert!(from_f64(f64::NAN).is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&q(2, 4)), "1/2");
        assert_eq!(format_rational(&q(-6, 3)), "-2");
    }
}
