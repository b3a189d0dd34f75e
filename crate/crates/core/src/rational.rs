//! Exact rational helpers shared across the crate.
//!
//! All endpoints, measures and probabilities are `BigRational`; floating
//! point only enters when taking logarithms or reporting values.

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parse an exact rational from a string: `"a/b"`, an integer `"a"`, or a
/// finite decimal like `"0.9"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Config(format!("malformed rational {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Config(format!("zero denominator in {s:?}")));
        }
        Ok(BigRational::new(n, d))
    } else if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() { "0" } else { int };
        let neg = int.starts_with('-');
        let i: BigInt = int.parse().map_err(|_| bad())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(f, scale);
        let whole = BigRational::from_integer(i);
        Ok(if neg { whole - frac_part } else { whole + frac_part })
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

/// Canonical `"numerator/denominator"` form used in reports and configs.
pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Natural log of a positive `BigInt`, accurate even when the integer does
/// not fit in an `f64`: take the top 53 bits and account for the shift.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("small bigint fits f64").ln();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_f64().expect("53-bit mantissa fits f64");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(q: &BigRational) -> f64 {
    assert!(q.is_positive(), "ln of non-positive rational");
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

/// Lossless conversion of a finite `f64` into a rational.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
}

/// `f64` approximation of a rational, falling back to exp(ln) for values
/// whose numerator or denominator overflows `f64`.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let n = q.numer().to_f64();
    let d = q.denom().to_f64();
    match (n, d) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => {
            let sign = if q.is_negative() { -1.0 } else { 1.0 };
            sign * ln_rational(&q.abs()).exp()
        }
    }
}

/// Exact dyadic rational 2^-k.
pub fn pow2_neg(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}
