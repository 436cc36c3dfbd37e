//! Exact numbers in the quadratic field Q(√2).
//!
//! Every cost, bid, value, budget and payment is a [`Num`]. Almost all of them
//! are plain rationals; the `√2` component exists so that lower-bound families
//! with a value of `√2` (and the `1 + √2` branch test of the knapsack
//! mechanisms) stay exact. Ordering is exact as well: the sign of `a + b√2` is
//! decided by comparing `a²` with `2b²`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `rat + surd·√2` with both coefficients exact rationals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Num {
    rat: BigRational,
    surd: BigRational,
}

impl Num {
    pub fn zero() -> Self {
        Num::default()
    }

    pub fn one() -> Self {
        Num::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Num::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Num::from_rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_rational(rat: BigRational) -> Self {
        Num { rat, surd: BigRational::zero() }
    }

    /// `rat + surd·√2`.
    pub fn from_parts(rat: BigRational, surd: BigRational) -> Self {
        Num { rat, surd }
    }

    pub fn sqrt2() -> Self {
        Num { rat: BigRational::zero(), surd: BigRational::one() }
    }

    /// `2^-bits`.
    pub fn pow2_neg(bits: u32) -> Self {
        Num::from_rational(BigRational::new(BigInt::one(), BigInt::one() << bits as usize))
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    /// The value as a rational, if it has no `√2` component.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_rational().then_some(&self.rat)
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        sign_of(&self.rat, &self.surd)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Num {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn min(self, other: Num) -> Num {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Num) -> Num {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn half(&self) -> Num {
        self * &Num::ratio(1, 2)
    }

    /// Multiplicative inverse; errors on zero.
    pub fn recip(&self) -> Result<Num> {
        if self.is_zero() {
            return Err(Error::Precondition("division by zero".into()));
        }
        if self.is_rational() {
            return Ok(Num::from_rational(self.rat.recip()));
        }
        // (a + b√2)^-1 = (a - b√2) / (a² - 2b²)
        let norm = &self.rat * &self.rat - BigRational::from_integer(BigInt::from(2)) * &self.surd * &self.surd;
        Ok(Num { rat: &self.rat / &norm, surd: -(&self.surd / &norm) })
    }

    /// Checked division.
    pub fn checked_div(&self, rhs: &Num) -> Result<Num> {
        Ok(self * &rhs.recip()?)
    }

    /// Rough `f64` view, for diagnostics only.
    pub fn to_f64(&self) -> f64 {
        self.rat.to_f64().unwrap_or(f64::NAN) + self.surd.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }
}

fn sign_of(a: &BigRational, b: &BigRational) -> Ordering {
    let sa = a.cmp(&BigRational::zero());
    let sb = b.cmp(&BigRational::zero());
    match (sa, sb) {
        (_, Ordering::Equal) => sa,
        (Ordering::Equal, _) => sb,
        _ if sa == sb => sa,
        _ => {
            // Opposite signs: |a| vs |b|√2, i.e. a² vs 2b²; never equal for nonzero rationals.
            let a2 = a * a;
            let b2 = BigRational::from_integer(BigInt::from(2)) * b * b;
            if a2 > b2 {
                sa
            } else {
                sb
            }
        }
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.surd.is_zero() && other.surd.is_zero() {
            return self.rat.cmp(&other.rat);
        }
        sign_of(&(&self.rat - &other.rat), &(&self.surd - &other.surd))
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Num {
    fn from(n: i64) -> Self {
        Num::from_integer(n)
    }
}

impl From<BigRational> for Num {
    fn from(r: BigRational) -> Self {
        Num::from_rational(r)
    }
}

impl Zero for Num {
    fn zero() -> Self {
        Num::default()
    }
    fn is_zero(&self) -> bool {
        Num::is_zero(self)
    }
}

impl One for Num {
    fn one() -> Self {
        Num::one()
    }
}

impl<'a> Add<&'a Num> for &'a Num {
    type Output = Num;
    fn add(self, rhs: &Num) -> Num {
        if self.surd.is_zero() && rhs.surd.is_zero() {
            return Num::from_rational(&self.rat + &rhs.rat);
        }
        Num { rat: &self.rat + &rhs.rat, surd: &self.surd + &rhs.surd }
    }
}

impl<'a> Sub<&'a Num> for &'a Num {
    type Output = Num;
    fn sub(self, rhs: &Num) -> Num {
        if self.surd.is_zero() && rhs.surd.is_zero() {
            return Num::from_rational(&self.rat - &rhs.rat);
        }
        Num { rat: &self.rat - &rhs.rat, surd: &self.surd - &rhs.surd }
    }
}

impl<'a> Mul<&'a Num> for &'a Num {
    type Output = Num;
    fn mul(self, rhs: &Num) -> Num {
        match (self.surd.is_zero(), rhs.surd.is_zero()) {
            (true, true) => Num::from_rational(&self.rat * &rhs.rat),
            (true, false) => Num { rat: &self.rat * &rhs.rat, surd: &self.rat * &rhs.surd },
            (false, true) => Num { rat: &self.rat * &rhs.rat, surd: &self.surd * &rhs.rat },
            (false, false) => {
                let two = BigRational::from_integer(BigInt::from(2));
                Num {
                    rat: &self.rat * &rhs.rat + two * &self.surd * &rhs.surd,
                    surd: &self.rat * &rhs.surd + &self.surd * &rhs.rat,
                }
            }
        }
    }
}

/// Panics on division by zero, like the rational operators it wraps.
impl<'a> Div<&'a Num> for &'a Num {
    type Output = Num;
    fn div(self, rhs: &Num) -> Num {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Neg for &Num {
    type Output = Num;
    fn neg(self) -> Num {
        Num { rat: -&self.rat, surd: -&self.surd }
    }
}

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        Num { rat: -self.rat, surd: -self.surd }
    }
}

macro_rules! forward_owned_binop {
    ($($tr:ident::$f:ident),*) => {$(
        impl $tr<Num> for Num {
            type Output = Num;
            fn $f(self, rhs: Num) -> Num { (&self).$f(&rhs) }
        }
        impl<'a> $tr<&'a Num> for Num {
            type Output = Num;
            fn $f(self, rhs: &Num) -> Num { (&self).$f(rhs) }
        }
        impl<'a> $tr<Num> for &'a Num {
            type Output = Num;
            fn $f(self, rhs: Num) -> Num { self.$f(&rhs) }
        }
    )*};
}
forward_owned_binop!(Add::add, Sub::sub, Mul::mul, Div::div);

impl AddAssign<&Num> for Num {
    fn add_assign(&mut self, rhs: &Num) {
        self.rat += &rhs.rat;
        if !rhs.surd.is_zero() {
            self.surd += &rhs.surd;
        }
    }
}

impl AddAssign<Num> for Num {
    fn add_assign(&mut self, rhs: Num) {
        *self += &rhs;
    }
}

impl SubAssign<&Num> for Num {
    fn sub_assign(&mut self, rhs: &Num) {
        self.rat -= &rhs.rat;
        if !rhs.surd.is_zero() {
            self.surd -= &rhs.surd;
        }
    }
}

impl Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |mut acc, x| {
            acc += &x;
            acc
        })
    }
}

impl<'a> Sum<&'a Num> for Num {
    fn sum<I: Iterator<Item = &'a Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |mut acc, x| {
            acc += x;
            acc
        })
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text: `7/10`, `sqrt2`, `3/2*sqrt2`, `1+sqrt2`, `-1/2-2*sqrt2`.
impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surd.is_zero() {
            return f.write_str(&fmt_rational(&self.rat));
        }
        let mut out = String::new();
        if !self.rat.is_zero() {
            out.push_str(&fmt_rational(&self.rat));
            out.push(if self.surd.is_negative() { '-' } else { '+' });
        } else if self.surd.is_negative() {
            out.push('-');
        }
        let mag = self.surd.abs();
        if !mag.is_one() {
            out.push_str(&fmt_rational(&mag));
            out.push('*');
        }
        out.push_str("sqrt2");
        f.write_str(&out)
    }
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Parses an unsigned rational literal: `12`, `7/10`, `0.7`, `1.25e-3` is not accepted.
fn parse_unsigned_rational(s: &str) -> Option<BigRational> {
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = digits(n)?;
        let d: BigInt = digits(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if whole.is_empty() && frac.is_empty() {
            return None;
        }
        let w: BigInt = if whole.is_empty() { BigInt::zero() } else { digits(whole)? };
        let f: BigInt = if frac.is_empty() { BigInt::zero() } else { digits(frac)? };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(w * &scale + f, scale));
    }
    Some(BigRational::from_integer(digits(s)?))
}

fn digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::parse_bytes(s.as_bytes(), 10)
}

/// One signed term: a rational, or an optional rational coefficient times `sqrt2`.
fn parse_term(term: &str, negative: bool, acc: &mut Num) -> Option<()> {
    let term = term.trim();
    let (coeff, is_surd) = if let Some(head) = term.strip_suffix("sqrt2") {
        let head = head.trim_end();
        let head = head.strip_suffix('*').map(str::trim_end).unwrap_or(head);
        if head.is_empty() {
            (BigRational::one(), true)
        } else {
            (parse_unsigned_rational(head)?, true)
        }
    } else {
        (parse_unsigned_rational(term)?, false)
    };
    let coeff = if negative { -coeff } else { coeff };
    if is_surd {
        acc.surd += coeff;
    } else {
        acc.rat += coeff;
    }
    Some(())
}

impl FromStr for Num {
    type Err = Error;

    /// Accepts integers, `p/q`, exact decimals (`0.7` is `7/10`), and sums of
    /// such terms with `sqrt2` multiples, e.g. `1 + sqrt2` or `-3/2*sqrt2`.
    fn from_str(s: &str) -> Result<Num> {
        let bad = || Error::InvalidNumber(s.to_string());
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(bad());
        }
        let mut acc = Num::zero();
        let mut negative = false;
        let mut start = 0;
        let bytes = text.as_bytes();
        let mut i = 0;
        if bytes[0] == b'+' || bytes[0] == b'-' {
            negative = bytes[0] == b'-';
            start = 1;
            i = 1;
        }
        while i <= bytes.len() {
            if i == bytes.len() || ((bytes[i] == b'+' || bytes[i] == b'-') && i > start) {
                parse_term(&text[start..i], negative, &mut acc).ok_or_else(bad)?;
                if i < bytes.len() {
                    negative = bytes[i] == b'-';
                }
                start = i + 1;
            }
            i += 1;
        }
        Ok(acc)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Num, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Floor of a rational as a big integer.
pub(crate) fn floor_rational(r: &BigRational) -> BigInt {
    r.numer().div_floor(r.denom())
}

/// Ceiling of a rational as a big integer.
pub(crate) fn ceil_rational(r: &BigRational) -> BigInt {
    -((-r.numer()).div_floor(r.denom()))
}

/// Largest integer whose square is at most `n` (`n >= 0`).
pub(crate) fn isqrt(n: &BigInt) -> BigInt {
    debug_assert!(n.sign() != Sign::Minus);
    Roots::sqrt(n)
}

/// The simplest rational (smallest denominator, then numerator) in `[lo, hi]`,
/// for `0 <= lo <= hi`. Stern–Brocot descent via continued fractions.
pub(crate) fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    debug_assert!(lo <= hi && !lo.is_negative());
    let fl = floor_rational(lo);
    let fl_r = BigRational::from_integer(fl.clone());
    if &fl_r == lo {
        return fl_r;
    }
    // lo is not an integer: any integer in (lo, hi] wins.
    if BigRational::from_integer(&fl + 1u32) <= *hi {
        return BigRational::from_integer(fl + 1u32);
    }
    // Both share integer part fl; recurse on reciprocals of the fractional parts.
    let lo_frac = lo - &fl_r;
    let hi_frac = hi - &fl_r;
    let inner = simplest_between(&hi_frac.recip(), &lo_frac.recip());
    fl_r + inner.recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> Num {
        s.parse().unwrap()
    }

    #[test]
    fn parses_decimal_exactly() {
        assert_eq!(n("0.7"), Num::ratio(7, 10));
        assert_eq!(n("7/10"), Num::ratio(7, 10));
        assert_eq!(n("-12"), Num::from_integer(-12));
        assert_eq!(n(".5"), Num::ratio(1, 2));
    }

    #[test]
    fn parses_surd_forms() {
        assert_eq!(n("sqrt2"), Num::sqrt2());
        assert_eq!(n("1+sqrt2"), Num::one() + Num::sqrt2());
        assert_eq!(n("1/2 - 3*sqrt2"), Num::ratio(1, 2) - Num::from_integer(3) * Num::sqrt2());
        assert_eq!(n("-sqrt2"), -Num::sqrt2());
        assert_eq!(n("3/2*sqrt2").to_string(), "3/2*sqrt2");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "e", "1e5", "+", "--1", "1+"] {
            assert!(bad.parse::<Num>().is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn surd_ordering_is_exact() {
        // 1.41421356... vs 99/70 = 1.4142857...
        assert!(Num::sqrt2() < Num::ratio(99, 70));
        assert!(Num::sqrt2() > Num::ratio(140, 99));
        assert!(n("3-2*sqrt2") > Num::zero());
        assert!(n("2*sqrt2-3") < Num::zero());
    }

    #[test]
    fn one_plus_sqrt2_identity() {
        // (2 + √2)/√2 = 1 + √2
        let r = (Num::from_integer(2) + Num::sqrt2()) / Num::sqrt2();
        assert_eq!(r, Num::one() + Num::sqrt2());
    }

    #[test]
    fn simplest_rational_in_interval() {
        let lo = BigRational::new(545.into(), 100.into());
        let hi = BigRational::new(546.into(), 100.into());
        assert_eq!(simplest_between(&lo, &hi), BigRational::new(60.into(), 11.into()));
        let z = BigRational::zero();
        assert_eq!(simplest_between(&z, &z), z);
    }

    fn arb_num() -> impl Strategy<Value = Num> {
        (-50i64..50, 1i64..20, -20i64..20, 1i64..10).prop_map(|(a, b, c, d)| {
            Num::from_parts(
                BigRational::new(a.into(), b.into()),
                BigRational::new(c.into(), d.into()),
            )
        })
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(x in arb_num()) {
            prop_assert_eq!(x.to_string().parse::<Num>().unwrap(), x);
        }

        #[test]
        fn ordering_agrees_with_floats_when_far_apart(x in arb_num(), y in arb_num()) {
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x < y, fx < fy);
            }
        }

        #[test]
        fn division_inverts_multiplication(x in arb_num(), y in arb_num()) {
            prop_assume!(!y.is_zero());
            prop_assert_eq!(&(&x * &y) / &y, x);
        }
    }
}
