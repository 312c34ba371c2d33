//! Scalar modes for polynomial arithmetic.
//!
//! Three coefficient domains are supported: `Complex64` (float64),
//! `CQ = Complex<BigRational>` (exact rational, for moment and Hankel work)
//! and [`CExt`] (complex extended-precision binary floats with a configurable
//! mantissa size). Real counterparts implement [`RealScalar`] and back the
//! triangular factorizations and interval solves.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_float::ops::{Abs, SquareRoot};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;
pub type CQ = num_complex::Complex<BigRational>;

type FB = FBig<HalfEven, 2>;

thread_local! {
    static EXT_BITS: Cell<usize> = const { Cell::new(128) };
}

/// Default mantissa size (in bits) for extended-precision scalars created on
/// this thread.
pub fn set_ext_bits(bits: usize) {
    assert!(bits >= 16, "extended precision below 16 bits is not useful");
    EXT_BITS.with(|b| b.set(bits));
}

pub fn ext_bits() -> usize {
    EXT_BITS.with(|b| b.get())
}

/// Parse a scalar written either as an integer, a `p/q` rational or a decimal
/// string (optionally with an `e` exponent). The result is exact.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Input("empty numeric literal".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|e| Error::Input(format!("bad numerator {num:?}: {e}")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|e| Error::Input(format!("bad denominator {den:?}: {e}")))?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp: i64 = e
                .parse()
                .map_err(|err| Error::Input(format!("bad exponent {e:?}: {err}")))?;
            (m, exp)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(&digits)
        .map_err(|e| Error::Input(format!("bad numeric literal {s:?}: {e}")))?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let q = if scale >= 0 {
        Q::from_integer(n * ten.pow(scale as u32))
    } else {
        Q::new(n, ten.pow((-scale) as u32))
    };
    Ok(q)
}

/// Exact conversion of an `f64` to a rational; rejects NaN and infinities.
pub fn rational_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Input(format!("non-finite value {x} is not rational")))
}

fn bigint_to_ibig(v: &BigInt) -> IBig {
    let (sign, bytes) = v.to_bytes_le();
    let u = UBig::from_le_bytes(&bytes);
    match sign {
        Sign::Minus => -IBig::from(u),
        _ => IBig::from(u),
    }
}

/// A real binary floating-point number with an explicit mantissa size.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct ExtReal(FB);

impl ExtReal {
    pub fn from_f64(x: f64) -> Self {
        let v = FB::try_from(x).expect("non-finite value in extended-precision context");
        ExtReal(v.with_precision(ext_bits()).value())
    }

    pub fn from_int(n: i64) -> Self {
        ExtReal(FB::from(n).with_precision(ext_bits()).value())
    }

    pub fn from_rational(q: &Q) -> Self {
        let bits = ext_bits();
        let n = FB::from(bigint_to_ibig(q.numer()))
            .with_precision(bits)
            .value();
        let d = FB::from(bigint_to_ibig(q.denom()))
            .with_precision(bits)
            .value();
        ExtReal(n / d)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    pub fn abs(&self) -> Self {
        ExtReal(self.0.clone().abs())
    }

    /// Square root; panics on negative input (callers check sign first).
    pub fn sqrt(&self) -> Self {
        ExtReal(SquareRoot::sqrt(&self.0))
    }

    pub fn is_positive(&self) -> bool {
        !self.0.repr().is_zero() && self.0 > FB::ZERO
    }

    pub fn is_negative(&self) -> bool {
        !self.0.repr().is_zero() && self.0 < FB::ZERO
    }

    pub fn precision(&self) -> usize {
        self.0.precision()
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtReal({:e})", self.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

macro_rules! ext_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExtReal {
            type Output = ExtReal;
            fn $method(self, rhs: ExtReal) -> ExtReal {
                ExtReal(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExtReal> for &ExtReal {
            type Output = ExtReal;
            fn $method(self, rhs: &'a ExtReal) -> ExtReal {
                ExtReal((&self.0).$method(&rhs.0))
            }
        }
    };
}

ext_binop!(Add, add);
ext_binop!(Sub, sub);
ext_binop!(Mul, mul);
ext_binop!(Div, div);

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl Zero for ExtReal {
    fn zero() -> Self {
        ExtReal::from_int(0)
    }
    fn is_zero(&self) -> bool {
        self.0.repr().is_zero()
    }
}

impl One for ExtReal {
    fn one() -> Self {
        ExtReal::from_int(1)
    }
}

/// Complex number over [`ExtReal`].
#[derive(Clone, PartialEq, Debug)]
pub struct CExt {
    pub re: ExtReal,
    pub im: ExtReal,
}

impl CExt {
    pub fn new(re: ExtReal, im: ExtReal) -> Self {
        CExt { re, im }
    }

    pub fn norm_sqr(&self) -> ExtReal {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
}

impl fmt::Display for CExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", self.re, self.im)
    }
}

impl Add for CExt {
    type Output = CExt;
    fn add(self, rhs: CExt) -> CExt {
        CExt::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for CExt {
    type Output = CExt;
    fn sub(self, rhs: CExt) -> CExt {
        CExt::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for CExt {
    type Output = CExt;
    fn mul(self, rhs: CExt) -> CExt {
        let re = &(&self.re * &rhs.re) - &(&self.im * &rhs.im);
        let im = &(&self.re * &rhs.im) + &(&self.im * &rhs.re);
        CExt::new(re, im)
    }
}

impl Div for CExt {
    type Output = CExt;
    fn div(self, rhs: CExt) -> CExt {
        let d = rhs.norm_sqr();
        let re = &(&(&self.re * &rhs.re) + &(&self.im * &rhs.im)) / &d;
        let im = &(&(&self.im * &rhs.re) - &(&self.re * &rhs.im)) / &d;
        CExt::new(re, im)
    }
}

impl Neg for CExt {
    type Output = CExt;
    fn neg(self) -> CExt {
        CExt::new(-self.re, -self.im)
    }
}

impl Zero for CExt {
    fn zero() -> Self {
        CExt::new(ExtReal::zero(), ExtReal::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for CExt {
    fn one() -> Self {
        CExt::new(ExtReal::one(), ExtReal::zero())
    }
}

/// Coefficient domain for [`crate::poly::Polynomial`].
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    /// True when arithmetic in this domain is exact.
    fn exact() -> bool;
    fn from_int(n: i64) -> Self;
    fn from_cq(v: &CQ) -> Self;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;
    fn is_finite(&self) -> bool;
    fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Coeff for Complex64 {
    fn exact() -> bool {
        false
    }
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_cq(v: &CQ) -> Self {
        Complex64::new(
            ToPrimitive::to_f64(&v.re).unwrap_or(f64::NAN),
            ToPrimitive::to_f64(&v.im).unwrap_or(f64::NAN),
        )
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Coeff for CQ {
    fn exact() -> bool {
        true
    }
    fn from_int(n: i64) -> Self {
        CQ::new(Q::from_integer(n.into()), Q::zero())
    }
    fn from_cq(v: &CQ) -> Self {
        v.clone()
    }
    fn conj(&self) -> Self {
        CQ::new(self.re.clone(), -self.im.clone())
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            ToPrimitive::to_f64(&self.re).unwrap_or(f64::NAN),
            ToPrimitive::to_f64(&self.im).unwrap_or(f64::NAN),
        )
    }
    fn is_finite(&self) -> bool {
        true
    }
}

impl Coeff for CExt {
    fn exact() -> bool {
        false
    }
    fn from_int(n: i64) -> Self {
        CExt::new(ExtReal::from_int(n), ExtReal::zero())
    }
    fn from_cq(v: &CQ) -> Self {
        CExt::new(ExtReal::from_rational(&v.re), ExtReal::from_rational(&v.im))
    }
    fn conj(&self) -> Self {
        CExt::new(self.re.clone(), -self.im.clone())
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn is_finite(&self) -> bool {
        true
    }
}

/// Real scalars backing Hankel factorizations and interval endpoint solves.
pub trait RealScalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn exact() -> bool;
    fn from_int(n: i64) -> Self;
    fn from_rational(q: &Q) -> Self;
    fn to_f64(&self) -> f64;
    fn is_strictly_positive(&self) -> bool;
}

impl RealScalar for f64 {
    fn exact() -> bool {
        false
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_rational(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_strictly_positive(&self) -> bool {
        *self > 0.0
    }
}

impl RealScalar for Q {
    fn exact() -> bool {
        true
    }
    fn from_int(n: i64) -> Self {
        Q::from_integer(n.into())
    }
    fn from_rational(q: &Q) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_strictly_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

impl RealScalar for ExtReal {
    fn exact() -> bool {
        false
    }
    fn from_int(n: i64) -> Self {
        ExtReal::from_int(n)
    }
    fn from_rational(q: &Q) -> Self {
        ExtReal::from_rational(q)
    }
    fn to_f64(&self) -> f64 {
        ExtReal::to_f64(self)
    }
    fn is_strictly_positive(&self) -> bool {
        ExtReal::is_positive(self)
    }
}

/// Total lexicographic order on complex values, used to normalize point sets.
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn cq_from_rational(re: Q) -> CQ {
    CQ::new(re, Q::zero())
}
