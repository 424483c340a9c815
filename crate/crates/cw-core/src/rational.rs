//! Exact rational scalars and their text form.
//!
//! Rationals cross every serialization boundary as strings, `"num/den"` with
//! the `/den` part omitted for integers, so no precision is lost in files or
//! reports. Floats are never parsed into [`Q`].

use crate::error::{CwError, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

pub type Q = BigRational;

/// Rational from an integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair. Panics on zero denominator.
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qzero() -> Q {
    Q::zero()
}

pub fn qone() -> Q {
    Q::one()
}

/// Parses `"3/4"`, `"-7"`, `"0"`. Whitespace around either part is rejected.
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || CwError::input(format!("not a rational: {s:?} (expected \"int\" or \"int/int\")"));
    let mk_int = |t: &str| -> Result<BigInt> { t.parse::<BigInt>().map_err(|_| bad()) };
    match s.split_once('/') {
        None => Ok(Q::from_integer(mk_int(s)?)),
        Some((n, d)) => {
            let den = mk_int(d)?;
            if den.is_zero() {
                return Err(CwError::input(format!("zero denominator in {s:?}")));
            }
            Ok(Q::new(mk_int(n)?, den))
        }
    }
}

/// Canonical text form: lowest terms, `/1` omitted, sign on the numerator.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rational to nearest f64; used only where a fitting routine needs floats.
pub fn q_to_f64(x: &Q) -> f64 {
    let numer = x.numer();
    let denom = x.denom();
    // Shift both parts down together when they exceed f64 range.
    let nf = bigint_to_f64(numer);
    let df = bigint_to_f64(denom);
    nf / df
}

fn bigint_to_f64(b: &BigInt) -> f64 {
    // BigInt implements conversion via string only for huge values; the
    // magnitudes in this crate stay far below 2^1000, so this is exact enough.
    let s = b.to_string();
    s.parse::<f64>().unwrap_or(if b.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Stable decimal rendering with 12 significant digits, for float report fields.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    let s = format!("{:.*e}", 11, x);
    // Normalize exponent form "1.50000000000e2" and strip trailing zeros of
    // the mantissa so reports stay readable and byte-stable.
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let mant = mant.trim_end_matches('0').trim_end_matches('.');
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..=8).contains(&exp) {
        // Re-render without exponent for small magnitudes.
        let digits = (11 - exp).max(0) as usize;
        let t = format!("{:.*}", digits, x);
        let t = if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        };
        t
    } else {
        format!("{mant}e{exp}")
    }
}
