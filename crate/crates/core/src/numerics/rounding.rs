use num_bigint::{BigUint, Sign};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{BigReal, NumericsError};

/// An integer recovered from a near-integer real, with the distance that
/// was rounded away.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedInteger {
    #[serde(with = "crate::serde_util::biguint_string")]
    pub value: BigUint,
    pub distance: BigReal,
}

/// Snap `x` to the nearest positive integer if it lies within `tol` of it.
pub fn round_to_integer(x: &BigReal, tol: &BigReal) -> Result<RoundedInteger, NumericsError> {
    if !tol.is_positive() {
        return Err(NumericsError::InvalidTolerance(tol.to_string()));
    }
    let (nearest, distance) = x.nearest_integer();
    if distance > *tol {
        return Err(NumericsError::NotNearInteger {
            distance,
            tolerance: tol.clone(),
        });
    }
    let (sign, value) = nearest.into_parts();
    if sign == Sign::Minus || value.is_zero() {
        return Err(NumericsError::NonPositiveInput(x.to_string()));
    }
    Ok(RoundedInteger { value, distance })
}

/// Number of identical leading decimal digits of `a` and `b`.
///
/// Both values are compared from their leading digit down to the lower of
/// their last significant digit and the units place, so an integer is
/// compared over all of its digits. Values whose leading digits sit at
/// different decimal exponents share nothing.
pub fn leading_digit_overlap(a: &BigReal, b: &BigReal) -> u64 {
    let (a, b) = (a.abs(), b.abs());
    if a.is_zero() || b.is_zero() {
        return 0;
    }
    let top = a.adjusted_exponent();
    if top != b.adjusted_exponent() {
        return 0;
    }
    let low = a.exponent().min(b.exponent()).min(0);
    let span = (top - low + 1) as usize;
    let pad = |x: &BigReal| {
        let mut digits = x.mantissa().to_str_radix(10).into_bytes();
        digits.resize(span, b'0');
        digits
    };
    pad(&a)
        .iter()
        .zip(pad(&b).iter())
        .take_while(|(x, y)| x == y)
        .count() as u64
}
