//! Exact rational numbers.
//!
//! Values that fit in a pair of `i64`s are kept inline and operated on with
//! `i128` intermediates; anything larger is promoted to an arbitrary-precision
//! [`BigRational`]. The representation is canonical: a value is stored in the
//! small form if and only if its reduced numerator and denominator both fit,
//! so structural equality coincides with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Reduced, `den > 0`, `num != i64::MIN`.
    Small { num: i64, den: i64 },
    /// Reduced, and not representable as `Small`.
    Big(BigRational),
}

/// An exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

fn gcd_i128(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}

impl Rational {
    /// Builds `num/den`, reducing to canonical form.
    pub fn new(num: i64, den: i64) -> Result<Self, ModelError> {
        if den == 0 {
            return Err(ModelError::ZeroDenominator);
        }
        Ok(Self::from_i128(num as i128, den as i128))
    }

    pub fn zero() -> Self {
        Rational(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Rational(Repr::Small { num: 1, den: 1 })
    }

    pub fn from_integer(v: i64) -> Self {
        Self::from_i128(v as i128, 1)
    }

    /// `1 / 10^exp`.
    pub fn pow10_recip(exp: u32) -> Self {
        Self::from_big(BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10u32), exp as usize)))
    }

    /// `den` must be non-zero; callers inside the crate guarantee it.
    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let g = gcd_i128(num, den);
        let (mut num, mut den) = if g > 1 { (num / g, den / g) } else { (num, den) };
        if den < 0 {
            num = -num;
            den = -den;
        }
        if num == 0 {
            return Self::zero();
        }
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(n), Ok(d)) if n != i64::MIN => Rational(Repr::Small { num: n, den: d }),
            _ => Rational(Repr::Big(BigRational::new_raw(BigInt::from(num), BigInt::from(den)))),
        }
    }

    fn from_big(r: BigRational) -> Self {
        // BigRational::new reduces; new_raw callers must pass reduced values.
        let (num, den) = (r.numer(), r.denom());
        match (num.to_i64(), den.to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Rational(Repr::Small { num: n, den: d }),
            _ => Rational(Repr::Big(r)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => BigRational::new_raw(BigInt::from(*num), BigInt::from(*den)),
            Repr::Big(b) => b.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, .. } => BigInt::from(*num),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small { den, .. } => BigInt::from(*den),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small { num: 0, .. })
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(match &self.0 {
            Repr::Small { num, den } => Self::from_i128(*den as i128, *num as i128),
            Repr::Big(b) => Self::from_big(b.recip()),
        })
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        rhs.recip().map(|r| self * &r)
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small { num, den } => *num as f64 / *den as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Exact value of a finite float.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Self::from_big)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Decimal rendering rounded half-up to `sig` significant digits.
    ///
    /// The value is rounded exactly from the rational, so the output is a
    /// pure function of the value.
    pub fn to_decimal(&self, sig: usize) -> String {
        assert!(sig >= 1);
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let num = self.numer().abs();
        let den = self.denom();
        let ten = BigInt::from(10u32);
        let digits = |x: &BigInt| x.to_str_radix(10).len() as i64;
        // floor(log10(num/den)) is either d or d - 1.
        let mut exp10 = digits(&num) - digits(&den);
        let cmp_pow = |e: i64| -> Ordering {
            // compare num/den with 10^e
            if e >= 0 {
                num.cmp(&(&den * num_traits::pow(ten.clone(), e as usize)))
            } else {
                (&num * num_traits::pow(ten.clone(), (-e) as usize)).cmp(&den)
            }
        };
        if cmp_pow(exp10) == Ordering::Less {
            exp10 -= 1;
        }
        let mut scale = sig as i64 - 1 - exp10;
        let round = |scale: i64| -> BigInt {
            let (n, d) = if scale >= 0 {
                (&num * num_traits::pow(ten.clone(), scale as usize), den.clone())
            } else {
                (num.clone(), &den * num_traits::pow(ten.clone(), (-scale) as usize))
            };
            let (q, r) = n.div_rem(&d);
            if r * 2u32 >= d {
                q + 1u32
            } else {
                q
            }
        };
        let mut q = round(scale);
        if q.to_str_radix(10).len() > sig {
            scale -= 1;
            q = round(scale);
        }
        let mut s = q.to_str_radix(10);
        if scale > 0 {
            let scale = scale as usize;
            if s.len() <= scale {
                s = format!("{}{}", "0".repeat(scale - s.len() + 1), s);
            }
            s.insert(s.len() - scale, '.');
        } else {
            s.push_str(&"0".repeat((-scale) as usize));
        }
        if neg {
            s.insert(0, '-');
        }
        s
    }

    /// Canonical `"num/den"` form, used by serialization.
    pub fn to_fraction_string(&self) -> String {
        match &self.0 {
            Repr::Small { num, den } => format!("{num}/{den}"),
            Repr::Big(b) => format!("{}/{}", b.numer(), b.denom()),
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Self::from_integer(v)
    }
}

impl From<usize> for Rational {
    fn from(v: usize) -> Self {
        Self::from_i128(v as i128, 1)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    return Rational::from_i128(a + c, b);
                }
                let g = gcd_i128(b, d);
                let (bg, dg) = (b / g, d / g);
                // |a*dg| and |c*bg| are both below 2^126
                let num = a * dg + c * bg;
                match bg.checked_mul(d) {
                    Some(den) => Rational::from_i128(num, den),
                    None => Rational::from_big(self.to_big() + rhs.to_big()),
                }
            }
            _ => Rational::from_big(self.to_big() + rhs.to_big()),
        }
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                let g1 = gcd_i128(a, d).max(1);
                let g2 = gcd_i128(c, b).max(1);
                Rational::from_i128((a / g1) * (c / g2), (b / g2) * (d / g1))
            }
            _ => Rational::from_big(self.to_big() * rhs.to_big()),
        }
    }
}

impl<'a> Div<&'a Rational> for &'a Rational {
    type Output = Rational;
    /// Panics on division by zero; use [`Rational::checked_div`] otherwise.
    fn div(self, rhs: &Rational) -> Rational {
        self.checked_div(rhs).expect("division by zero rational")
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small { num, den } => Rational(Repr::Small { num: -num, den: *den }),
            Repr::Big(b) => Rational::from_big(-b.clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational { (&self).$m(rhs) }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = &*self + rhs;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = &*self - rhs;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = &*self - &rhs;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    /// `p/q`, or just `p` for integers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den: 1 } => write!(f, "{num}"),
            Repr::Small { num, den } => write!(f, "{num}/{den}"),
            Repr::Big(b) if b.denom().is_one() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_fraction_string())
    }
}

impl FromStr for Rational {
    type Err = ModelError;

    /// Accepts `p/q` or a bare integer `p`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::RationalParse(s.to_string());
        let s_trim = s.trim();
        let (n, d) = match s_trim.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s_trim, "1"),
        };
        let num: BigInt = n.parse().map_err(|_| bad())?;
        let den: BigInt = d.parse().map_err(|_| bad())?;
        if den.sign() == Sign::NoSign {
            return Err(ModelError::ZeroDenominator);
        }
        Ok(Rational::from_big(BigRational::new(num, den)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as a \"num/den\" string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_integer(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from_i128(v as i128, 1))
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Shorthand for tests and fixed constants: `r(3, 4)` is `3/4`.
///
/// Panics on a zero denominator.
pub fn r(num: i64, den: i64) -> Rational {
    Rational::new(num, den).expect("non-zero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_is_canonical() {
        assert_eq!(r(2, 4).to_fraction_string(), "1/2");
        assert_eq!(r(-1, -3).to_fraction_string(), "1/3");
        assert_eq!(r(0, 7).to_fraction_string(), "0/1");
        assert_eq!(r(3, -6).to_fraction_string(), "-1/2");
        assert_eq!(Rational::new(1, 0), Err(ModelError::ZeroDenominator));
    }

    #[test]
    fn big_values_demote_back_to_small() {
        let huge = r(i64::MAX, 1) + r(i64::MAX, 1);
        assert!(matches!(huge.0, Repr::Big(_)));
        let back = &huge - &r(i64::MAX, 1);
        assert!(matches!(back.0, Repr::Small { .. }));
        assert_eq!(back, r(i64::MAX, 1));
        let tiny = r(1, i64::MAX) * r(1, i64::MAX);
        assert!(matches!(tiny.0, Repr::Big(_)));
        assert_eq!(tiny.recip().unwrap() / r(i64::MAX, 1), r(i64::MAX, 1));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), r(3, 4));
        assert_eq!("-6/8".parse::<Rational>().unwrap(), r(-3, 4));
        assert_eq!("5".parse::<Rational>().unwrap(), r(5, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x/2".parse::<Rational>().is_err());
        assert_eq!(r(5, 1).to_string(), "5");
        assert_eq!(r(5, 3).to_string(), "5/3");
        let big: Rational = "123456789012345678901234567891/2".parse().unwrap();
        assert_eq!(big.to_fraction_string(), "123456789012345678901234567891/2");
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let v = vec![r(1, 2), r(3, 1)];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["1/2","3/1"]"#);
        let back: Vec<Rational> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let ints: Vec<Rational> = serde_json::from_str("[0, 2]").unwrap();
        assert_eq!(ints, vec![r(0, 1), r(2, 1)]);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(r(1, 3).to_decimal(12), "0.333333333333");
        assert_eq!(r(2, 3).to_decimal(12), "0.666666666667");
        assert_eq!(r(16, 15).to_decimal(12), "1.06666666667");
        assert_eq!(r(3, 2).to_decimal(12), "1.50000000000");
        assert_eq!(r(1, 1).to_decimal(3), "1.00");
        assert_eq!(r(999, 1000).to_decimal(2), "1.0");
        assert_eq!(r(-1, 8).to_decimal(2), "-0.13");
        assert_eq!(r(1234, 1).to_decimal(2), "1200");
        assert_eq!(r(1, 1000).to_decimal(3), "0.00100");
        assert_eq!(Rational::zero().to_decimal(5), "0");
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        prop_oneof![
            (any::<i32>(), 1..i32::MAX).prop_map(|(n, d)| r(n as i64, d as i64)),
            (any::<i64>(), 1..i64::MAX).prop_map(|(n, d)| r(n.max(i64::MIN + 1), d)),
        ]
    }

    proptest! {
        #[test]
        fn add_then_sub_is_identity(a in arb_rational(), b in arb_rational()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn small_path_agrees_with_bigrational(a in arb_rational(), b in arb_rational()) {
            let (ba, bb) = (a.to_big(), b.to_big());
            prop_assert_eq!((&a + &b).to_big(), &ba + &bb);
            prop_assert_eq!((&a * &b).to_big(), &ba * &bb);
            prop_assert_eq!(a.cmp(&b), ba.cmp(&bb));
            if !b.is_zero() {
                prop_assert_eq!((&a / &b).to_big(), &ba / &bb);
            }
        }

        #[test]
        fn ordering_is_consistent(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            prop_assert_eq!(a == b, a.cmp(&b) == Ordering::Equal);
        }

        #[test]
        fn fraction_string_round_trips(a in arb_rational()) {
            prop_assert_eq!(a.to_fraction_string().parse::<Rational>().unwrap(), a);
        }
    }
}
