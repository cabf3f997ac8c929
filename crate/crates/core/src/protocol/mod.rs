//! Group secret generation over the half-duplex (one listener per round,
//! N rounds) and full-duplex (everyone at once, one round) channels.

mod fmac;
mod hmac;

use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelError;
use crate::numerics::{
    exp, round_to_integer, sample_prime, small_primes, BigReal, FactorConfig, NumericsError,
    PrecisionContext, PrimeInput, RoundedInteger,
};

pub use fmac::{
    pre_process_full, recover_secret_full, run_full_round, run_full_round_with, run_protocol_fmac,
    run_protocol_fmac_with, FmacObservation,
};
pub use hmac::{
    derive_secret_half, pre_process_half, run_protocol_hmac, run_protocol_hmac_with, run_round,
    run_round_with, HmacRoundRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Hmac,
    Fmac,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Hmac => "hmac",
            ProtocolKind::Fmac => "fmac",
        })
    }
}

/// Invalid inputs: nothing was transmitted.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("gain from user {from} to user {to} is not positive")]
    NonPositiveGain { from: usize, to: usize },
    #[error("invalid user set: {0}")]
    InvalidUsers(String),
    #[error("channel is not in integer-fading mode")]
    NotIntegerChannel,
    #[error("cannot draw {n} distinct primes with {digits} digits")]
    InsufficientPrimes { n: usize, digits: u32 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Why a receiver could not recover its secret. Recorded per user; other
/// users carry on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoveryFailure {
    #[error("post-processed value is {distance} from an integer (tolerance {tolerance})")]
    NotNearInteger {
        distance: BigReal,
        tolerance: BigReal,
    },
    #[error("post-processed value near 10^{exponent} exceeds the recoverable ceiling 10^{limit}")]
    Overflow { exponent: i64, limit: i64 },
    #[error("factorization gave up on cofactor {cofactor}")]
    FactorBoundExceeded { cofactor: String },
    #[error("own prime {prime} appears in the received product")]
    DuplicatePrime { prime: u64 },
    #[error("post-processed value {value} does not round to a positive integer")]
    NonPositive { value: String },
    #[error("arithmetic failure: {message}")]
    Arithmetic { message: String },
}

impl From<NumericsError> for RecoveryFailure {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::NotNearInteger {
                distance,
                tolerance,
            } => RecoveryFailure::NotNearInteger {
                distance,
                tolerance,
            },
            NumericsError::Overflow { exponent, limit } => {
                RecoveryFailure::Overflow { exponent, limit }
            }
            NumericsError::FactorBoundExceeded { cofactor } => {
                RecoveryFailure::FactorBoundExceeded { cofactor }
            }
            NumericsError::NonPositiveInput(value) => RecoveryFailure::NonPositive { value },
            other => RecoveryFailure::Arithmetic {
                message: other.to_string(),
            },
        }
    }
}

/// Receiver-side knobs shared by both protocols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtocolOptions {
    /// Rounding tolerance; defaults to the context's default tolerance.
    pub tolerance: Option<BigReal>,
    pub factor: FactorConfig,
}

impl ProtocolOptions {
    pub fn tolerance(&self, ctx: &PrecisionContext) -> BigReal {
        self.tolerance
            .clone()
            .unwrap_or_else(|| ctx.default_tolerance())
    }
}

/// One user's view of the final secret.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSecret {
    pub user: usize,
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub secret: Option<BigUint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RecoveryFailure>,
}

impl UserSecret {
    fn from_result(user: usize, r: Result<BigUint, RecoveryFailure>) -> Self {
        match r {
            Ok(s) => Self {
                user,
                secret: Some(s),
                failure: None,
            },
            Err(f) => Self {
                user,
                secret: None,
                failure: Some(f),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundEntry {
    Hmac(HmacRoundRecord),
    Fmac(FmacObservation),
}

impl RoundEntry {
    pub fn distance_to_integer(&self) -> Option<&BigReal> {
        match self {
            RoundEntry::Hmac(r) => r.distance_to_integer.as_ref(),
            RoundEntry::Fmac(o) => o.distance_to_integer.as_ref(),
        }
    }
}

/// Everything one protocol execution produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: ProtocolKind,
    pub n_users: usize,
    pub rounds_used: usize,
    pub rounds: Vec<RoundEntry>,
    pub per_user_secret: Vec<UserSecret>,
}

impl ProtocolTranscript {
    pub fn secrets(&self) -> Vec<Option<BigUint>> {
        self.per_user_secret
            .iter()
            .map(|u| u.secret.clone())
            .collect()
    }

    pub fn failure_count(&self) -> usize {
        self.per_user_secret
            .iter()
            .filter(|u| u.secret.is_none())
            .count()
    }

    pub fn hmac_rounds(&self) -> impl Iterator<Item = &HmacRoundRecord> {
        self.rounds.iter().filter_map(|r| match r {
            RoundEntry::Hmac(r) => Some(r),
            RoundEntry::Fmac(_) => None,
        })
    }

    pub fn fmac_observations(&self) -> impl Iterator<Item = &FmacObservation> {
        self.rounds.iter().filter_map(|r| match r {
            RoundEntry::Fmac(o) => Some(o),
            RoundEntry::Hmac(_) => None,
        })
    }

    /// Largest rounding distance over the receivers that got that far.
    pub fn max_distance_to_integer(&self) -> Option<BigReal> {
        self.rounds
            .iter()
            .filter_map(RoundEntry::distance_to_integer)
            .max()
            .cloned()
    }
}

/// Primes drawn for one execution and the number of redraws needed to keep
/// them distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctPrimes {
    pub primes: Vec<PrimeInput>,
    pub collisions: u32,
}

/// Draw `n` distinct primes of `digits` digits, resampling on collision.
pub fn sample_distinct_primes<R: Rng + ?Sized>(
    n: usize,
    digits: u32,
    rng: &mut R,
) -> Result<DistinctPrimes, ProtocolError> {
    if (1..=4).contains(&digits) {
        let lo = 10u32.pow(digits - 1);
        let available = small_primes(10u32.pow(digits) - 1)
            .iter()
            .filter(|&&p| p >= lo)
            .count();
        if n > available {
            return Err(ProtocolError::InsufficientPrimes { n, digits });
        }
    }
    let mut primes: Vec<PrimeInput> = Vec::with_capacity(n);
    let mut collisions = 0;
    while primes.len() < n {
        let p = sample_prime(digits, rng)?;
        if primes.contains(&p) {
            collisions += 1;
        } else {
            primes.push(p);
        }
    }
    Ok(DistinctPrimes { primes, collisions })
}

/// Post-processing shared by both receivers: `exp`, then snap to an integer.
pub(crate) struct PostProcessed {
    pub post_value: Option<BigReal>,
    pub rounded: Result<RoundedInteger, RecoveryFailure>,
}

pub(crate) fn post_process(
    observation: &BigReal,
    ctx: &PrecisionContext,
    tolerance: &BigReal,
) -> PostProcessed {
    let limit = ctx.integer_ceiling_exponent();
    let estimate = observation.to_f64() / std::f64::consts::LN_10;
    if estimate > (limit + 1) as f64 {
        return PostProcessed {
            post_value: None,
            rounded: Err(RecoveryFailure::Overflow {
                exponent: estimate.floor() as i64,
                limit,
            }),
        };
    }
    let post_value = match exp(observation, ctx) {
        Ok(v) => v,
        Err(e) => {
            return PostProcessed {
                post_value: None,
                rounded: Err(e.into()),
            }
        }
    };
    if post_value.adjusted_exponent() >= limit {
        return PostProcessed {
            rounded: Err(RecoveryFailure::Overflow {
                exponent: post_value.adjusted_exponent(),
                limit,
            }),
            post_value: Some(post_value),
        };
    }
    let rounded = round_to_integer(&post_value, tolerance).map_err(RecoveryFailure::from);
    PostProcessed {
        post_value: Some(post_value),
        rounded,
    }
}

pub(crate) fn check_users(primes: &[PrimeInput], n_users: usize) -> Result<(), ProtocolError> {
    if primes.len() < 2 {
        return Err(ProtocolError::InvalidUsers(format!(
            "need at least 2 users, got {}",
            primes.len()
        )));
    }
    if primes.len() != n_users {
        return Err(ProtocolError::InvalidUsers(format!(
            "{} primes for a {n_users}-user channel",
            primes.len()
        )));
    }
    Ok(())
}
