//! Certified comparisons involving `e` and square roots.
//!
//! A [`Real`] is a small expression tree over exact [`Num`] leaves, Euler's
//! number and square roots. It is evaluated into rational enclosures at a
//! given precision; comparisons start at 100 bits (enclosure width below
//! 1e-30) and double the precision until the sign of the difference is known.
//! Subexpressions built only from `Num` leaves are folded exactly.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::num::{ceil_rational, floor_rational, isqrt, Num};

const START_BITS: u32 = 100;
const MAX_BITS: u32 = 1 << 14;

#[derive(Clone, Debug)]
pub enum Real {
    Exact(Num),
    E,
    Sqrt(Box<Real>),
    Add(Box<Real>, Box<Real>),
    Sub(Box<Real>, Box<Real>),
    Mul(Box<Real>, Box<Real>),
    Div(Box<Real>, Box<Real>),
}

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    fn point(x: BigRational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    fn sub(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Widens the endpoints outward onto the dyadic grid `2^-bits`.
    fn round_out(self, bits: u32) -> Interval {
        if self.is_point() && self.lo.denom().bits() <= u64::from(bits) {
            return self;
        }
        let scale = BigRational::from_integer(BigInt::one() << bits as usize);
        let lo = BigRational::new(floor_rational(&(&self.lo * &scale)), scale.numer().clone());
        let hi = BigRational::new(ceil_rational(&(&self.hi * &scale)), scale.numer().clone());
        Interval { lo, hi }
    }
}

/// Enclosure of `sqrt(x)` for rational `x >= 0`, width about `2^-bits`.
fn sqrt_bounds(x: &BigRational, bits: u32) -> (BigRational, BigRational) {
    let scale = BigInt::one() << (2 * bits as usize);
    let scaled = floor_rational(&(x * BigRational::from_integer(scale)));
    let root = isqrt(&scaled);
    let denom = BigInt::one() << bits as usize;
    (BigRational::new(root.clone(), denom.clone()), BigRational::new(root + 1u32, denom))
}

fn sqrt2_interval(bits: u32) -> Interval {
    let (lo, hi) = sqrt_bounds(&BigRational::from_integer(2.into()), bits);
    Interval { lo, hi }
}

/// Enclosure of `e` from the Taylor series with the tail bounded by `2/(N+1)!`.
fn e_interval(bits: u32) -> Interval {
    let target = BigRational::new(BigInt::one(), BigInt::one() << (bits as usize + 2));
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut k = 0u32;
    loop {
        sum += &term;
        k += 1;
        term /= BigRational::from_integer(k.into());
        let tail = &term * BigRational::from_integer(2.into());
        if tail < target {
            return Interval { lo: sum.clone(), hi: sum + tail };
        }
    }
}

fn num_interval(x: &Num, bits: u32) -> Interval {
    if x.is_rational() {
        return Interval::point(x.rational_part().clone());
    }
    let s = sqrt2_interval(bits + 8);
    let surd = Interval::point(x.surd_part().clone());
    Interval::point(x.rational_part().clone()).add(&surd.mul(&s))
}

impl Real {
    pub fn e() -> Real {
        Real::E
    }

    pub fn sqrt(self) -> Real {
        Real::Sqrt(Box::new(self))
    }

    pub fn exact(&self) -> Option<&Num> {
        match self {
            Real::Exact(n) => Some(n),
            _ => None,
        }
    }

    /// Rational enclosure of the expression at working precision `bits`.
    pub fn enclose(&self, bits: u32) -> Result<Interval> {
        let iv = match self {
            Real::Exact(n) => num_interval(n, bits),
            Real::E => e_interval(bits),
            Real::Sqrt(x) => {
                let inner = x.enclose(bits + 4)?;
                if inner.lo.is_negative() {
                    if inner.hi.is_negative() {
                        return Err(Error::Precondition("square root of a negative number".into()));
                    }
                    return Err(Error::Undecided { bits });
                }
                let (lo, _) = sqrt_bounds(&inner.lo, bits + 4);
                let (_, hi) = sqrt_bounds(&inner.hi, bits + 4);
                Interval { lo, hi }
            }
            Real::Add(a, b) => a.enclose(bits + 2)?.add(&b.enclose(bits + 2)?),
            Real::Sub(a, b) => a.enclose(bits + 2)?.sub(&b.enclose(bits + 2)?),
            Real::Mul(a, b) => {
                let (x, y) = (a.enclose(bits + 8)?, b.enclose(bits + 8)?);
                x.mul(&y)
            }
            Real::Div(a, b) => {
                let (x, y) = (a.enclose(bits + 8)?, b.enclose(bits + 8)?);
                if y.contains_zero() {
                    if y.is_point() {
                        return Err(Error::Precondition("division by zero".into()));
                    }
                    return Err(Error::Undecided { bits });
                }
                let inv = Interval { lo: y.hi.recip(), hi: y.lo.recip() };
                x.mul(&inv)
            }
        };
        Ok(iv.round_out(bits + 16))
    }

    /// Sign of the expression, refining precision until decided.
    pub fn signum(&self) -> Result<Ordering> {
        if let Real::Exact(n) = self {
            return Ok(n.signum());
        }
        let mut bits = START_BITS;
        loop {
            match self.enclose(bits) {
                Ok(iv) => {
                    if iv.lo.is_positive() {
                        return Ok(Ordering::Greater);
                    }
                    if iv.hi.is_negative() {
                        return Ok(Ordering::Less);
                    }
                    if iv.is_point() {
                        return Ok(Ordering::Equal);
                    }
                }
                Err(Error::Undecided { .. }) => {}
                Err(e) => return Err(e),
            }
            if bits >= MAX_BITS {
                return Err(Error::Undecided { bits });
            }
            bits *= 2;
        }
    }

    /// Certified comparison `self` vs `other`.
    pub fn compare(&self, other: &Real) -> Result<Ordering> {
        if let (Real::Exact(a), Real::Exact(b)) = (self, other) {
            return Ok(a.cmp(b));
        }
        (self.clone() - other.clone()).signum()
    }

    pub fn le(&self, other: &Real) -> Result<bool> {
        Ok(self.compare(other)? != Ordering::Greater)
    }

    pub fn ge(&self, other: &Real) -> Result<bool> {
        Ok(self.compare(other)? != Ordering::Less)
    }

    /// Decimal rendering rounded half-up to `digits` fractional digits, with
    /// trailing zeros trimmed.
    pub fn to_decimal(&self, digits: u32) -> Result<String> {
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), digits as usize));
        let half = BigRational::new(1.into(), 2.into());
        let mut bits = START_BITS.max(digits * 4 + 16);
        loop {
            let iv = self.enclose(bits)?;
            let lo = floor_rational(&(&iv.lo * &scale + &half));
            let hi = floor_rational(&(&iv.hi * &scale + &half));
            if lo == hi {
                return Ok(format_scaled(&lo, digits));
            }
            if bits >= MAX_BITS {
                return Err(Error::Undecided { bits });
            }
            bits *= 2;
        }
    }
}

fn format_scaled(v: &BigInt, digits: u32) -> String {
    let negative = v.is_negative();
    let mut s = v.abs().to_string();
    let d = digits as usize;
    if s.len() <= d {
        s = "0".repeat(d + 1 - s.len()) + &s;
    }
    let (int, frac) = s.split_at(s.len() - d);
    let frac = frac.trim_end_matches('0');
    let mut out = String::new();
    if negative && (int != "0" || !frac.is_empty()) {
        out.push('-');
    }
    out.push_str(int);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

impl From<Num> for Real {
    fn from(n: Num) -> Self {
        Real::Exact(n)
    }
}

impl From<&Num> for Real {
    fn from(n: &Num) -> Self {
        Real::Exact(n.clone())
    }
}

impl From<i64> for Real {
    fn from(n: i64) -> Self {
        Real::Exact(Num::from_integer(n))
    }
}

macro_rules! real_binop {
    ($tr:ident, $f:ident, $variant:ident, $fold:expr) => {
        impl $tr for Real {
            type Output = Real;
            fn $f(self, rhs: Real) -> Real {
                match (self, rhs) {
                    (Real::Exact(a), Real::Exact(b)) => match $fold(&a, &b) {
                        Some(n) => Real::Exact(n),
                        None => Real::$variant(Box::new(Real::Exact(a)), Box::new(Real::Exact(b))),
                    },
                    (a, b) => Real::$variant(Box::new(a), Box::new(b)),
                }
            }
        }
    };
}

real_binop!(Add, add, Add, |a: &Num, b: &Num| Some(a + b));
real_binop!(Sub, sub, Sub, |a: &Num, b: &Num| Some(a - b));
real_binop!(Mul, mul, Mul, |a: &Num, b: &Num| Some(a * b));
real_binop!(Div, div, Div, |a: &Num, b: &Num| a.checked_div(b).ok());

/// An irrational constant with a lazily cached rational enclosure, for hot
/// comparisons of the form `k·a` vs `b`.
pub struct CachedConstant {
    build: fn() -> Real,
    enclosure: OnceLock<Interval>,
}

impl CachedConstant {
    const BITS: u32 = 160;

    pub const fn new(build: fn() -> Real) -> Self {
        CachedConstant { build, enclosure: OnceLock::new() }
    }

    pub fn real(&self) -> Real {
        (self.build)()
    }

    /// Certified comparison of `k·a` against `b`. Rational `a ≥ 0` and `b`
    /// are decided from the cached enclosure when it separates them.
    pub fn scaled_cmp(&self, a: &Num, b: &Num) -> Result<Ordering> {
        if let (Some(ra), Some(rb)) = (a.as_rational(), b.as_rational()) {
            if !ra.is_negative() {
                let iv = self.enclosure.get_or_init(|| self.real().enclose(Self::BITS).expect("constant has an enclosure"));
                if *rb < &iv.lo * ra {
                    return Ok(Ordering::Greater);
                }
                if *rb > &iv.hi * ra {
                    return Ok(Ordering::Less);
                }
            }
        }
        (self.real() * Real::from(a)).compare(&Real::from(b))
    }
}

/// Named constants used by the mechanisms and their guarantees.
pub mod consts {
    use super::{CachedConstant, Real};
    use crate::num::Num;

    /// [`det_sm_factor`] with a cached enclosure.
    pub static DET_SM_FACTOR: CachedConstant = CachedConstant::new(det_sm_factor);

    fn n(v: i64) -> Real {
        Real::from(v)
    }

    /// `(1 + 4e + √(1 + 24e²)) / (2(e − 1))`, the singleton-branch factor of
    /// the deterministic submodular mechanism (about 7.34).
    pub fn det_sm_factor() -> Real {
        let e = Real::e;
        let root = (n(1) + n(24) * e() * e()).sqrt();
        (n(1) + n(4) * e() + root) / (n(2) * (e() - n(1)))
    }

    /// `(6e − 1 + √(1 + 24e²)) / (2(e − 1))`, about 8.34.
    pub fn det_sm_ratio() -> Real {
        let e = Real::e;
        let root = (n(1) + n(24) * e() * e()).sqrt();
        (n(6) * e() - n(1) + root) / (n(2) * (e() - n(1)))
    }

    /// `5e / (e − 1)`, about 7.91.
    pub fn random_sm_ratio() -> Real {
        n(5) * Real::e() / (Real::e() - n(1))
    }

    /// `e / (e − 1)`.
    pub fn e_over_e_minus_one() -> Real {
        Real::e() / (Real::e() - n(1))
    }

    /// `1 − 1/e`.
    pub fn one_minus_inv_e() -> Real {
        n(1) - n(1) / Real::e()
    }

    /// `1 + √2`, exact.
    pub fn one_plus_sqrt2() -> Num {
        Num::one() + Num::sqrt2()
    }

    /// `2 + √2`, exact.
    pub fn two_plus_sqrt2() -> Num {
        Num::from_integer(2) + Num::sqrt2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_digits() {
        assert_eq!(Real::e().to_decimal(30).unwrap(), "2.718281828459045235360287471353");
    }

    #[test]
    fn constant_values() {
        // Cross-checked with mpmath at 50 digits.
        assert_eq!(consts::det_sm_factor().to_decimal(6).unwrap(), "7.340888");
        assert_eq!(consts::det_sm_ratio().to_decimal(6).unwrap(), "8.340888");
        assert_eq!(consts::random_sm_ratio().to_decimal(6).unwrap(), "7.909884");
        assert_eq!(consts::one_minus_inv_e().to_decimal(6).unwrap(), "0.632121");
        assert_eq!(Real::from(consts::one_plus_sqrt2()).to_decimal(4).unwrap(), "2.4142");
    }

    #[test]
    fn det_ratio_is_factor_plus_one() {
        let lhs = consts::det_sm_ratio();
        let rhs = consts::det_sm_factor() + Real::from(1);
        // Equal reals built differently: the difference stays within every enclosure.
        let iv = (lhs - rhs).enclose(400).unwrap();
        assert!(iv.lo.is_negative() || iv.lo.is_zero());
        assert!(iv.hi.is_positive() || iv.hi.is_zero());
        assert!(&iv.hi - &iv.lo < BigRational::new(1.into(), BigInt::one() << 380usize));
    }

    #[test]
    fn comparisons_decide() {
        let x = consts::det_sm_factor();
        assert!(x.ge(&Real::from(Num::ratio(734, 100))).unwrap());
        assert!(x.le(&Real::from(Num::ratio(7341, 1000))).unwrap());
        assert!(x.ge(&Real::from(Num::ratio(73408, 10000))).unwrap());
        assert_eq!(Real::from(3).compare(&Real::from(3)).unwrap(), Ordering::Equal);
        assert!(Real::e().sqrt().ge(&Real::from(Num::ratio(16, 10))).unwrap());
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(Real::from(Num::ratio(5, 2)).to_decimal(30).unwrap(), "2.5");
        assert_eq!(Real::from(Num::ratio(1, 3)).to_decimal(5).unwrap(), "0.33333");
        assert_eq!(Real::from(Num::ratio(-2, 3)).to_decimal(3).unwrap(), "-0.667");
        assert_eq!(Real::from(7).to_decimal(30).unwrap(), "7");
    }
}
