//! Scalar arithmetic and evaluation points.
//!
//! Every formula in the crate is written against [`Field`]. The exact
//! backend is [`Scalar`], an arbitrary-precision rational; `f64` implements
//! the same trait for timing runs.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar, always in lowest terms.
pub type Scalar = BigRational;

pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    /// Natural logarithm of the absolute value, used only to guess exponents.
    fn ln_abs(&self) -> f64;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(Self::one() / self)
    }

    /// Integer power; a zero base with negative exponent is a domain error.
    fn powi(&self, exponent: i64) -> Result<Self> {
        power(self, exponent)
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn ln_abs(&self) -> f64 {
        ln_abs_bigint(self.numer()) - ln_abs_bigint(self.denom())
    }
}

fn ln_abs_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().map(|x| x.abs().ln()).unwrap_or(f64::NEG_INFINITY);
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift;
    top.to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn ln_abs(&self) -> f64 {
        self.abs().ln()
    }
}

/// Exact integer power by repeated squaring.
pub fn power<F: Field>(base: &F, exponent: i64) -> Result<F> {
    if exponent < 0 && base.is_zero() {
        return Err(Error::Domain(format!("zero raised to {exponent}")));
    }
    let mut result = F::one();
    let mut sq = base.clone();
    let mut e = exponent.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq.clone() * &sq;
        }
    }
    if exponent < 0 {
        Ok(F::one() / result)
    } else {
        Ok(result)
    }
}

/// `num / den`, reporting a resonance named by `what` when `den` vanishes.
pub fn checked_div<F: Field>(num: F, den: &F, what: impl FnOnce() -> String) -> Result<F> {
    if den.is_zero() {
        return Err(Error::Resonance(what()));
    }
    Ok(num / den)
}

/// Parses `p/q`, `p` or `-p/q` into an exact scalar.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let t = s.trim();
    let v = BigRational::from_str(t).map_err(|_| Error::Parse(format!("not a rational number: {t:?}")))?;
    Ok(v)
}

/// Evaluation data shared by all formulas: the base `q`, its square root
/// `r` when known, and the spectral parameter through `w = λ²`, with `λ`
/// itself kept when known.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint<F> {
    q: F,
    r: Option<F>,
    w: F,
    lambda: Option<F>,
}

impl<F: Field> EvalPoint<F> {
    pub fn new(r: F, lambda: F) -> Result<Self> {
        if r.is_zero() || lambda.is_zero() {
            return Err(Error::Domain("r and lambda must be nonzero".into()));
        }
        let w = lambda.clone() * &lambda;
        Ok(EvalPoint { q: r.clone() * &r, r: Some(r), w, lambda: Some(lambda) })
    }

    /// A point known only through `w = λ²`.
    pub fn from_lambda_sq(r: F, w: F) -> Result<Self> {
        if r.is_zero() || w.is_zero() {
            return Err(Error::Domain("r and lambda^2 must be nonzero".into()));
        }
        Ok(EvalPoint { q: r.clone() * &r, r: Some(r), w, lambda: None })
    }

    /// A point given by `q` and `w = λ²` alone. Only formulas with integer
    /// powers of `q` and even powers of `λ` can be evaluated at it.
    pub fn from_q(q: F, w: F) -> Result<Self> {
        if q.is_zero() || w.is_zero() {
            return Err(Error::Domain("q and lambda^2 must be nonzero".into()));
        }
        Ok(EvalPoint { q, r: None, w, lambda: None })
    }

    pub fn r(&self) -> Result<&F> {
        self.r.as_ref().ok_or_else(|| Error::Unsupported("formula needs q^(1/2), only q is known".into()))
    }

    pub fn r_opt(&self) -> Option<&F> {
        self.r.as_ref()
    }

    pub fn q(&self) -> F {
        self.q.clone()
    }

    pub fn w(&self) -> &F {
        &self.w
    }

    pub fn lambda(&self) -> Result<&F> {
        self.lambda
            .as_ref()
            .ok_or_else(|| Error::Unsupported("formula needs lambda, only lambda^2 is known".into()))
    }

    pub fn lambda_opt(&self) -> Option<&F> {
        self.lambda.as_ref()
    }

    /// `λ^k`, using `w` for even `k` so that it works without `λ`.
    pub fn lambda_pow(&self, k: i64) -> Result<F> {
        if k % 2 == 0 {
            power(&self.w, k / 2)
        } else {
            power(self.lambda()?, k)
        }
    }

    /// Same base, spectral parameter replaced.
    pub fn with_lambda(&self, lambda: F) -> Result<Self> {
        let mut p = self.with_lambda_sq(lambda.clone() * &lambda)?;
        p.lambda = Some(lambda);
        Ok(p)
    }

    pub fn with_lambda_sq(&self, w: F) -> Result<Self> {
        if w.is_zero() {
            return Err(Error::Domain("lambda^2 must be nonzero".into()));
        }
        Ok(EvalPoint { q: self.q.clone(), r: self.r.clone(), w, lambda: None })
    }

    /// The point with `q → q⁻¹` and `λ → λ⁻¹`.
    pub fn inverted(&self) -> Result<Self> {
        Ok(EvalPoint {
            q: self.q.inv()?,
            r: self.r.as_ref().map(|r| r.inv()).transpose()?,
            w: self.w.inv()?,
            lambda: self.lambda.as_ref().map(|l| l.inv()).transpose()?,
        })
    }
}

impl EvalPoint<Scalar> {
    /// Converts to the floating-point backend.
    pub fn to_f64(&self) -> EvalPoint<f64> {
        let c = scalar_to_f64;
        EvalPoint { q: c(&self.q), r: self.r.as_ref().map(c), w: c(&self.w), lambda: self.lambda.as_ref().map(c) }
    }
}

/// Nearest double, or NaN when out of range.
pub fn scalar_to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Shorthand for an exact rational `num/den`.
pub fn rat(num: i64, den: i64) -> Scalar {
    Scalar::from_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_examples() {
        let x = rat(7, 3);
        assert_eq!(power(&x, 0).unwrap(), rat(1, 1));
        assert_eq!(power(&rat(1, 2), -2).unwrap(), rat(4, 1));
        assert_eq!(power(&rat(3, 5), 3).unwrap(), rat(27, 125));
        assert!(power(&rat(0, 1), -1).is_err());
    }

    #[test]
    fn canonical_equality() {
        assert_eq!(rat(2, 4), rat(1, 2));
        assert_eq!(parse_scalar("6/8").unwrap(), rat(3, 4));
        assert_eq!(parse_scalar("-3").unwrap(), rat(-3, 1));
        assert!(parse_scalar("0.5").is_err());
    }

    #[test]
    fn lambda_powers() {
        let p = EvalPoint::from_lambda_sq(rat(1, 2), rat(1, 8)).unwrap();
        assert_eq!(p.lambda_pow(-4).unwrap(), rat(64, 1));
        assert!(p.lambda_pow(1).is_err());
        let p = EvalPoint::new(rat(1, 2), rat(1, 3)).unwrap();
        assert_eq!(p.lambda_pow(-3).unwrap(), rat(27, 1));
        assert_eq!(p.q(), rat(1, 4));
        let inv = p.inverted().unwrap();
        assert_eq!(inv.q(), rat(4, 1));
        assert_eq!(inv.w(), &rat(9, 1));
        let p = EvalPoint::from_q(rat(1, 2), rat(1, 8)).unwrap();
        assert!(p.r().is_err());
        assert_eq!(p.inverted().unwrap().q(), rat(2, 1));
    }

    #[test]
    fn ln_abs_guess() {
        let big = power(&rat(3, 2), 700).unwrap();
        let expect = 700.0 * (1.5f64).ln();
        assert!((big.ln_abs() - expect).abs() < 1e-6);
    }

    fn nonzero() -> impl Strategy<Value = Scalar> {
        (-97i64..=97, 1i64..=97).prop_filter("nonzero", |(n, _)| *n != 0).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn power_is_additive(x in nonzero(), a in -20i64..=20, b in -20i64..=20) {
            let lhs = power(&x, a + b).unwrap();
            let rhs = power(&x, a).unwrap() * power(&x, b).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn field_axioms(x in nonzero(), y in nonzero()) {
            prop_assert!(Field::is_zero(&(x.clone() + (-x.clone()))));
            prop_assert!(Field::is_one(&(x.clone() * x.inv().unwrap())));
            prop_assert_eq!(x.clone() * &y, y * &x);
        }
    }
}
