//! Exact rational helpers. Every exact quantity in the crate is a [`Rational`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: u128, den: u128) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `2^{-n}`.
pub fn pow2_inv(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n)
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

/// Formats as `p/q` in lowest terms with `q > 0`; integers keep the `/1`.
pub fn format(r: &Rational) -> String {
    // BigRational is always kept reduced with a positive denominator.
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(s: &str) -> Result<Rational> {
    let (p, q) = s
        .split_once('/')
        .ok_or_else(|| Error::Format(format!("rational {s:?} is not of the form p/q")))?;
    let p: BigInt = p
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad numerator in {s:?}")))?;
    let q: BigInt = q
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad denominator in {s:?}")))?;
    if !q.is_positive() {
        return Err(Error::Format(format!("denominator must be positive in {s:?}")));
    }
    let r = Rational::new(p.clone(), q.clone());
    if r.numer() != &p || r.denom() != &q {
        return Err(Error::Format(format!("{s:?} is not in lowest terms")));
    }
    Ok(r)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
