use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NumericsError;

const POW10_CACHE_LIMIT: u64 = 4096;

thread_local! {
    static POW10: RefCell<Vec<BigUint>> = RefCell::new(vec![BigUint::one()]);
}

/// `10^n` as a big integer. Small powers are cached per thread.
pub(crate) fn pow10_uint(n: u64) -> BigUint {
    if n >= POW10_CACHE_LIMIT {
        return BigUint::from(10u32).pow(n as u32);
    }
    POW10.with(|cache| {
        let mut cache = cache.borrow_mut();
        while cache.len() as u64 <= n {
            let next = cache.last().unwrap() * 10u32;
            cache.push(next);
        }
        cache[n as usize].clone()
    })
}

/// Number of decimal digits in `m` (0 for zero).
pub(crate) fn decimal_len(m: &BigUint) -> u64 {
    if m.is_zero() {
        return 0;
    }
    let bits = m.bits();
    let estimate = ((bits - 1) as f64 * std::f64::consts::LOG10_2).floor() as u64 + 1;
    if *m >= pow10_uint(estimate) {
        estimate + 1
    } else {
        estimate
    }
}

/// Arbitrary-precision decimal real: `(-1)^negative * mantissa * 10^exponent`.
///
/// Values are kept canonical: the mantissa carries no trailing zeros and zero
/// is unsigned, so structural equality coincides with numeric equality.
/// The std arithmetic operators are exact; rounded arithmetic goes through a
/// [`PrecisionContext`](super::PrecisionContext).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigReal {
    negative: bool,
    mantissa: BigUint,
    exponent: i64,
}

impl BigReal {
    pub fn new(negative: bool, mantissa: BigUint, exponent: i64) -> Self {
        let mut out = Self {
            negative,
            mantissa,
            exponent,
        };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.negative = false;
            self.exponent = 0;
            return;
        }
        let billion = 1_000_000_000u32;
        loop {
            let (q, r) = self.mantissa.div_rem(&BigUint::from(billion));
            if !r.is_zero() {
                break;
            }
            self.mantissa = q;
            self.exponent += 9;
        }
        loop {
            let (q, r) = self.mantissa.div_rem(&BigUint::from(10u32));
            if !r.is_zero() {
                break;
            }
            self.mantissa = q;
            self.exponent += 1;
        }
    }

    pub fn zero() -> Self {
        Self {
            negative: false,
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from(1u64)
    }

    /// Exactly `10^k`.
    pub fn pow10(k: i64) -> Self {
        Self {
            negative: false,
            mantissa: BigUint::one(),
            exponent: k,
        }
    }

    /// Exact decimal image of the shortest round-trip representation of `x`.
    pub fn from_f64(x: f64) -> Result<Self, NumericsError> {
        if !x.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        format!("{x:e}").parse()
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn is_positive(&self) -> bool {
        !self.negative && !self.is_zero()
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// Count of significant decimal digits.
    pub fn significant_digits(&self) -> u64 {
        decimal_len(&self.mantissa)
    }

    /// Decimal exponent of the leading digit: `x = d.ddd * 10^adjusted`.
    pub fn adjusted_exponent(&self) -> i64 {
        if self.is_zero() {
            return 0;
        }
        self.exponent + decimal_len(&self.mantissa) as i64 - 1
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        if !out.is_zero() {
            out.negative = !out.negative;
        }
        out
    }

    pub fn abs(&self) -> Self {
        Self {
            negative: false,
            ..self.clone()
        }
    }

    /// Exact multiplication by `10^k`.
    pub fn scale10(&self, k: i64) -> Self {
        let mut out = self.clone();
        if !out.is_zero() {
            out.exponent += k;
        }
        out
    }

    fn signed_mantissa(&self) -> BigInt {
        let sign = if self.negative {
            Sign::Minus
        } else {
            Sign::Plus
        };
        BigInt::from_biguint(sign, self.mantissa.clone())
    }

    fn from_signed(m: BigInt, exponent: i64) -> Self {
        let (sign, mag) = m.into_parts();
        Self::new(sign == Sign::Minus, mag, exponent)
    }

    /// Round to at most `digits` significant digits, ties to even.
    pub fn round_to_digits(&self, digits: u32) -> Self {
        let len = decimal_len(&self.mantissa);
        if len <= u64::from(digits) {
            return self.clone();
        }
        let drop = len - u64::from(digits);
        let divisor = pow10_uint(drop);
        let (mut q, r) = self.mantissa.div_rem(&divisor);
        let twice = r << 1u32;
        match twice.cmp(&divisor) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal if q.is_odd() => q += 1u32,
            _ => {}
        }
        Self::new(self.negative, q, self.exponent + drop as i64)
    }

    pub(crate) fn add_rounded(&self, other: &Self, digits: u32) -> Self {
        if self.is_zero() {
            return other.round_to_digits(digits);
        }
        if other.is_zero() {
            return self.round_to_digits(digits);
        }
        // A far smaller addend only matters as a sticky bit below the
        // rounding position; substituting a tiny proxy keeps alignment cheap.
        let top_a = self.adjusted_exponent();
        let top_b = other.adjusted_exponent();
        let far = i64::from(digits) + 4;
        let (big, small) = if top_a >= top_b {
            (self, other)
        } else {
            (other, self)
        };
        let hi = big.adjusted_exponent();
        if hi - small.adjusted_exponent() > far && big.exponent > hi - far {
            let proxy = Self {
                negative: small.negative,
                mantissa: BigUint::one(),
                exponent: hi - far,
            };
            return (big + &proxy).round_to_digits(digits);
        }
        (self + other).round_to_digits(digits)
    }

    pub(crate) fn div_rounded(&self, other: &Self, digits: u32) -> Result<Self, NumericsError> {
        if other.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let len_a = decimal_len(&self.mantissa) as i64;
        let len_b = decimal_len(&other.mantissa) as i64;
        let shift = (i64::from(digits) + 3 + len_b - len_a).max(0);
        let numerator = &self.mantissa * pow10_uint(shift as u64);
        let (mut q, r) = numerator.div_rem(&other.mantissa);
        let mut exponent = self.exponent - other.exponent - shift;
        if !r.is_zero() {
            q = q * 10u32 + 1u32;
            exponent -= 1;
        }
        Ok(Self::new(self.negative != other.negative, q, exponent).round_to_digits(digits))
    }

    /// Nearest integer and the absolute distance to it (ties round up in
    /// magnitude).
    pub fn nearest_integer(&self) -> (BigInt, Self) {
        if self.exponent >= 0 {
            let m = &self.mantissa * pow10_uint(self.exponent as u64);
            let sign = if self.negative {
                Sign::Minus
            } else {
                Sign::Plus
            };
            return (BigInt::from_biguint(sign, m), Self::zero());
        }
        let scale_digits = (-self.exponent) as u64;
        let scale = pow10_uint(scale_digits);
        let (q, r) = self.mantissa.div_rem(&scale);
        let (mag, dist) = if (&r << 1u32) >= scale {
            (q + 1u32, &scale - &r)
        } else {
            (q, r)
        };
        let sign = if self.negative {
            Sign::Minus
        } else {
            Sign::Plus
        };
        (
            BigInt::from_biguint(sign, mag),
            Self::new(false, dist, self.exponent),
        )
    }

    /// The value as a non-negative integer, if it is one exactly.
    pub fn to_biguint_exact(&self) -> Option<BigUint> {
        if self.negative || self.exponent < 0 {
            return None;
        }
        Some(&self.mantissa * pow10_uint(self.exponent as u64))
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let digits = self.mantissa.to_str_radix(10);
        let keep = digits.len().min(20);
        let exp = self.exponent + (digits.len() - keep) as i64;
        let text = format!(
            "{}{}e{}",
            if self.negative { "-" } else { "" },
            &digits[..keep],
            exp
        );
        text.parse().unwrap_or(if self.negative {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        })
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let by_adjusted = self.adjusted_exponent().cmp(&other.adjusted_exponent());
        if by_adjusted != Ordering::Equal {
            return by_adjusted;
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa * pow10_uint((self.exponent - e) as u64);
        let b = &other.mantissa * pow10_uint((other.exponent - e) as u64);
        a.cmp(&b)
    }
}

impl Default for BigReal {
    fn default() -> Self {
        Self::zero()
    }
}

impl Ord for BigReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        }
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &BigReal {
    type Output = BigReal;

    fn add(self, rhs: &BigReal) -> BigReal {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = self.signed_mantissa() * BigInt::from(pow10_uint((self.exponent - e) as u64));
        let b = rhs.signed_mantissa() * BigInt::from(pow10_uint((rhs.exponent - e) as u64));
        BigReal::from_signed(a + b, e)
    }
}

impl Sub for &BigReal {
    type Output = BigReal;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: &BigReal) -> BigReal {
        self + &rhs.neg()
    }
}

impl Mul for &BigReal {
    type Output = BigReal;

    fn mul(self, rhs: &BigReal) -> BigReal {
        BigReal::new(
            self.negative != rhs.negative,
            &self.mantissa * &rhs.mantissa,
            self.exponent + rhs.exponent,
        )
    }
}

impl Neg for BigReal {
    type Output = BigReal;

    fn neg(self) -> BigReal {
        BigReal::neg(&self)
    }
}

impl From<u64> for BigReal {
    fn from(v: u64) -> Self {
        Self::new(false, BigUint::from(v), 0)
    }
}

impl From<u32> for BigReal {
    fn from(v: u32) -> Self {
        Self::from(u64::from(v))
    }
}

impl From<i64> for BigReal {
    fn from(v: i64) -> Self {
        Self::new(v < 0, BigUint::from(v.unsigned_abs()), 0)
    }
}

impl From<BigUint> for BigReal {
    fn from(v: BigUint) -> Self {
        Self::new(false, v, 0)
    }
}

impl From<&BigUint> for BigReal {
    fn from(v: &BigUint) -> Self {
        Self::new(false, v.clone(), 0)
    }
}

impl From<BigInt> for BigReal {
    fn from(v: BigInt) -> Self {
        Self::from_signed(v, 0)
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let sign = if self.negative { "-" } else { "" };
        let digits = self.mantissa.to_str_radix(10);
        let len = digits.len() as i64;
        let adjusted = self.exponent + len - 1;
        if self.exponent >= 0 && adjusted < 40 {
            write!(f, "{sign}{digits}{}", "0".repeat(self.exponent as usize))
        } else if self.exponent < 0 && adjusted >= -7 {
            if adjusted >= 0 {
                let split = (adjusted + 1) as usize;
                write!(f, "{sign}{}.{}", &digits[..split], &digits[split..])
            } else {
                write!(
                    f,
                    "{sign}0.{}{digits}",
                    "0".repeat((-adjusted - 1) as usize)
                )
            }
        } else {
            let exp_sign = if adjusted < 0 { "-" } else { "+" };
            if len > 1 {
                write!(
                    f,
                    "{sign}{}.{}e{exp_sign}{}",
                    &digits[..1],
                    &digits[1..],
                    adjusted.abs()
                )
            } else {
                write!(f, "{sign}{digits}e{exp_sign}{}", adjusted.abs())
            }
        }
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({self})")
    }
}

impl FromStr for BigReal {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::Parse(s.to_string());
        let text = s.trim();
        let (negative, rest) = match text.as_bytes().first() {
            Some(b'-') => (true, &text[1..]),
            Some(b'+') => (false, &text[1..]),
            _ => (false, text),
        };
        let (body, exp_part) = match rest.find(['e', 'E']) {
            Some(idx) => (&rest[..idx], Some(&rest[idx + 1..])),
            None => (rest, None),
        };
        let (int_part, frac_part) = match body.find('.') {
            Some(idx) => (&body[..idx], &body[idx + 1..]),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part
            .bytes()
            .chain(frac_part.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let mut exponent: i64 = match exp_part {
            Some(e) => e.parse().map_err(|_| bad())?,
            None => 0,
        };
        exponent -= frac_part.len() as i64;
        let digits = format!("{int_part}{frac_part}");
        let mantissa = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        Ok(Self::new(negative, mantissa, exponent))
    }
}

impl ToPrimitive for BigReal {
    fn to_i64(&self) -> Option<i64> {
        let (n, dist) = self.nearest_integer();
        if dist.is_zero() {
            n.to_i64()
        } else {
            None
        }
    }

    fn to_u64(&self) -> Option<u64> {
        let (n, dist) = self.nearest_integer();
        if dist.is_zero() {
            n.to_u64()
        } else {
            None
        }
    }

    fn to_f64(&self) -> Option<f64> {
        Some(BigReal::to_f64(self))
    }
}

impl Serialize for BigReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BigReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct BigRealVisitor;

        impl Visitor<'_> for BigRealVisitor {
            type Value = BigReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or decimal string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BigReal, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigReal, E> {
                Ok(BigReal::from(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BigReal, E> {
                Ok(BigReal::from(v))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<BigReal, E> {
                BigReal::from_f64(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(BigRealVisitor)
    }
}
