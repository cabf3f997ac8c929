use serde::{Deserialize, Serialize};

use super::{BigReal, NumericsError};

/// Smallest precision accepted by [`PrecisionContext::new`].
pub const MIN_DIGITS: u32 = 16;

/// Default bound on the decimal exponent of `exp` results.
pub const DEFAULT_MAX_EXPONENT: i64 = 1_000_000;

/// Decimal working precision for real arithmetic.
///
/// Every rounded operation produces at most `digits` significant decimal
/// digits, rounded to nearest with ties to even. Transcendental kernels run
/// internally at 1.5x this precision before the final rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionContext {
    digits: u32,
    max_exponent: i64,
}

impl PrecisionContext {
    pub fn new(digits: u32) -> Result<Self, NumericsError> {
        if digits < MIN_DIGITS {
            return Err(NumericsError::InvalidPrecision(digits));
        }
        Ok(Self {
            digits,
            max_exponent: DEFAULT_MAX_EXPONENT,
        })
    }

    pub fn with_max_exponent(mut self, max_exponent: i64) -> Self {
        self.max_exponent = max_exponent.max(1);
        self
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn max_exponent(&self) -> i64 {
        self.max_exponent
    }

    /// Decimal digits carried by the ln/exp kernels before rounding.
    pub fn working_digits(&self) -> u32 {
        self.digits + self.digits.div_ceil(2)
    }

    /// Default tolerance for [`round_to_integer`](super::round_to_integer):
    /// `10^-(digits/4)`.
    pub fn default_tolerance(&self) -> BigReal {
        BigReal::pow10(-((self.digits / 4) as i64))
    }

    /// Headroom (in decimal digits) a value must leave below `10^digits` so
    /// that its fractional part is still resolved to within the default
    /// tolerance.
    pub fn guard_digits(&self) -> u32 {
        self.digits.div_ceil(4) + 4
    }

    /// Largest decimal exponent whose integer part can be recovered exactly.
    pub fn integer_ceiling_exponent(&self) -> i64 {
        i64::from(self.digits) - i64::from(self.guard_digits())
    }

    pub fn add(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.add_rounded(b, self.digits)
    }

    pub fn sub(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.add_rounded(&b.neg(), self.digits)
    }

    pub fn mul(&self, a: &BigReal, b: &BigReal) -> BigReal {
        (a * b).round_to_digits(self.digits)
    }

    pub fn div(&self, a: &BigReal, b: &BigReal) -> Result<BigReal, NumericsError> {
        a.div_rounded(b, self.digits)
    }

    pub fn round(&self, x: &BigReal) -> BigReal {
        x.round_to_digits(self.digits)
    }

    /// One unit in the last place of `x` at this precision.
    pub fn ulp(&self, x: &BigReal) -> BigReal {
        if x.is_zero() {
            return BigReal::pow10(-i64::from(self.digits));
        }
        BigReal::pow10(x.adjusted_exponent() - i64::from(self.digits) + 1)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            digits: 64,
            max_exponent: DEFAULT_MAX_EXPONENT,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_precision() {
        assert!(matches!(
            PrecisionContext::new(15),
            Err(NumericsError::InvalidPrecision(15))
        ));
        assert!(PrecisionContext::new(16).is_ok());
    }

    #[test]
    fn default_tolerance_is_quarter_precision() {
        let ctx = PrecisionContext::new(128).unwrap();
        assert_eq!(ctx.default_tolerance().to_string(), "1e-32");
        assert_eq!(ctx.working_digits(), 192);
        assert_eq!(ctx.integer_ceiling_exponent(), 128 - 36);
    }

    #[test]
    fn ulp_tracks_leading_digit() {
        let ctx = PrecisionContext::new(20).unwrap();
        let x: BigReal = "123.45".parse().unwrap();
        assert_eq!(ctx.ulp(&x), BigReal::pow10(2 - 19));
    }
}
