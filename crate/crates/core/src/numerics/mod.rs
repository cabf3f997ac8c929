//! Exact integer machinery and arbitrary-precision decimal reals.

mod bigreal;
mod context;
mod factor;
mod montgomery;
mod primes;
mod rounding;
mod transcendental;

use thiserror::Error;

pub use bigreal::BigReal;
pub use context::{PrecisionContext, DEFAULT_MAX_EXPONENT, MIN_DIGITS};
pub use factor::{factorize, factorize_with, radical, FactorConfig, Factorization};
pub use primes::{
    decimal_digits, is_prime_u64, is_probable_prime, prime_product, sample_prime, small_primes,
    PrimeInput, MAX_PRIME_DIGITS,
};
pub use rounding::{leading_digit_overlap, round_to_integer, RoundedInteger};
pub use transcendental::{exp, ln, pow};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("precision of {0} digits is below the minimum of {MIN_DIGITS}")]
    InvalidPrecision(u32),
    #[error("expected a positive value, got {0}")]
    NonPositiveInput(String),
    #[error("result exponent {exponent} exceeds the bound {limit}")]
    Overflow { exponent: i64, limit: i64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("value is not finite")]
    NonFinite,
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(String),
    #[error("value is {distance} away from the nearest integer (tolerance {tolerance})")]
    NotNearInteger {
        distance: BigReal,
        tolerance: BigReal,
    },
    #[error("cofactor {cofactor} resisted factorization within the configured bound")]
    FactorBoundExceeded { cofactor: String },
    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("digit count {0} is out of range 1..={MAX_PRIME_DIGITS}")]
    InvalidDigitCount(u32),
}
