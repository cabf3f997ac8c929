use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_users, post_process, ProtocolError, ProtocolKind, ProtocolOptions, ProtocolTranscript,
    RecoveryFailure, RoundEntry, UserSecret,
};
use crate::channel::{superpose, ChannelState, CsiEstimate};
use crate::numerics::{ln, BigReal, PrecisionContext, PrimeInput};

/// One half-duplex round: user `receiver` listens, everyone else transmits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HmacRoundRecord {
    pub receiver: usize,
    /// `ln(p_i) / h_hat[i][receiver]`; `None` for the silent receiver.
    pub signals: Vec<Option<BigReal>>,
    pub observation: BigReal,
    pub post_value: Option<BigReal>,
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub recovered: Option<BigUint>,
    pub distance_to_integer: Option<BigReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RecoveryFailure>,
}

impl HmacRoundRecord {
    pub fn outcome(&self) -> Result<&BigUint, &RecoveryFailure> {
        match (&self.recovered, &self.failure) {
            (Some(v), _) => Ok(v),
            (None, Some(f)) => Err(f),
            (None, None) => unreachable!("a round either recovers or fails"),
        }
    }
}

/// `ln(p) / h_hat`.
pub fn pre_process_half(
    p: &PrimeInput,
    h_hat: &BigReal,
    ctx: &PrecisionContext,
) -> Result<BigReal, ProtocolError> {
    if !h_hat.is_positive() {
        return Err(ProtocolError::NonPositiveGain { from: 0, to: 0 });
    }
    let log = ln(&BigReal::from(p.value()), ctx)?;
    Ok(ctx.div(&log, h_hat)?)
}

fn divide_by_gain(
    log: &BigReal,
    h_hat: &BigReal,
    from: usize,
    to: usize,
    ctx: &PrecisionContext,
) -> Result<BigReal, ProtocolError> {
    if !h_hat.is_positive() {
        return Err(ProtocolError::NonPositiveGain { from, to });
    }
    Ok(ctx.div(log, h_hat)?)
}

fn logs(primes: &[PrimeInput], ctx: &PrecisionContext) -> Result<Vec<BigReal>, ProtocolError> {
    primes
        .iter()
        .map(|p| ln(&BigReal::from(p.value()), ctx).map_err(ProtocolError::from))
        .collect()
}

fn round_with_logs<R: Rng + ?Sized>(
    j: usize,
    logs: &[BigReal],
    ch: &ChannelState,
    csi: &CsiEstimate,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
    rng: &mut R,
) -> Result<HmacRoundRecord, ProtocolError> {
    let n = logs.len();
    if j >= n {
        return Err(ProtocolError::InvalidUsers(format!(
            "no user {j} among {n}"
        )));
    }
    let mut signals = Vec::with_capacity(n);
    for (i, log) in logs.iter().enumerate() {
        signals.push(if i == j {
            None
        } else {
            Some(divide_by_gain(log, csi.gain(i, j), i, j, ctx)?)
        });
    }
    let dense: Vec<BigReal> = signals
        .iter()
        .map(|s| s.clone().unwrap_or_default())
        .collect();
    let observation = superpose(&dense, j, true, ch, ctx, rng);
    let post = post_process(&observation, ctx, &opts.tolerance(ctx));
    let (recovered, distance_to_integer, failure) = match post.rounded {
        Ok(r) => (Some(r.value), Some(r.distance), None),
        Err(f) => (None, None, Some(f)),
    };
    Ok(HmacRoundRecord {
        receiver: j,
        signals,
        observation,
        post_value: post.post_value,
        recovered,
        distance_to_integer,
        failure,
    })
}

/// Round `j`: every other user sends `ln(p_i) / h_hat[i][j]`, user `j`
/// exponentiates what arrives and rounds it to `prod_{i != j} p_i`.
pub fn run_round<R: Rng + ?Sized>(
    j: usize,
    primes: &[PrimeInput],
    ch: &ChannelState,
    csi: &CsiEstimate,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> Result<HmacRoundRecord, ProtocolError> {
    run_round_with(j, primes, ch, csi, ctx, &ProtocolOptions::default(), rng)
}

pub fn run_round_with<R: Rng + ?Sized>(
    j: usize,
    primes: &[PrimeInput],
    ch: &ChannelState,
    csi: &CsiEstimate,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
    rng: &mut R,
) -> Result<HmacRoundRecord, ProtocolError> {
    check_users(primes, ch.n_users)?;
    round_with_logs(j, &logs(primes, ctx)?, ch, csi, ctx, opts, rng)
}

/// `S = p_own * recovered`.
pub fn derive_secret_half(
    p_own: &PrimeInput,
    round: &HmacRoundRecord,
) -> Result<BigUint, RecoveryFailure> {
    round
        .outcome()
        .map(|v| v * p_own.value())
        .map_err(Clone::clone)
}

/// All `N` rounds in user order over one static channel.
pub fn run_protocol_hmac<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    csi: &CsiEstimate,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> Result<ProtocolTranscript, ProtocolError> {
    run_protocol_hmac_with(primes, ch, csi, ctx, &ProtocolOptions::default(), rng)
}

pub fn run_protocol_hmac_with<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    csi: &CsiEstimate,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
    rng: &mut R,
) -> Result<ProtocolTranscript, ProtocolError> {
    check_users(primes, ch.n_users)?;
    let logs = logs(primes, ctx)?;
    let n = primes.len();
    let mut rounds = Vec::with_capacity(n);
    let mut per_user_secret = Vec::with_capacity(n);
    for (j, p) in primes.iter().enumerate() {
        let record = round_with_logs(j, &logs, ch, csi, ctx, opts, rng)?;
        per_user_secret.push(UserSecret::from_result(j, derive_secret_half(p, &record)));
        rounds.push(RoundEntry::Hmac(record));
    }
    Ok(ProtocolTranscript {
        protocol: ProtocolKind::Hmac,
        n_users: n,
        rounds_used: rounds.len(),
        rounds,
        per_user_secret,
    })
}
