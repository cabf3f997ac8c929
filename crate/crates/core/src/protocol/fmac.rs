use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_users, post_process, ProtocolError, ProtocolKind, ProtocolOptions, ProtocolTranscript,
    RecoveryFailure, RoundEntry, UserSecret,
};
use crate::channel::{superpose, ChannelState, FadingModel};
use crate::numerics::{
    factorize_with, ln, radical, BigReal, Factorization, PrecisionContext, PrimeInput,
};

/// What receiver `j` obtains from the single full-duplex exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FmacObservation {
    pub receiver: usize,
    /// After ideal self-interference cancellation.
    pub observation: BigReal,
    pub post_value: Option<BigReal>,
    /// The rounded post-processed value, `prod_{i != j} p_i^{c_ij}`.
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub recovered: Option<BigUint>,
    pub distance_to_integer: Option<BigReal>,
    pub exponent_map: Option<Factorization>,
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub recovered_radical: Option<BigUint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RecoveryFailure>,
}

/// `ln(p) / h_star`.
pub fn pre_process_full(
    p: &PrimeInput,
    h_star: &BigReal,
    ctx: &PrecisionContext,
) -> Result<BigReal, ProtocolError> {
    if !h_star.is_positive() {
        return Err(ProtocolError::NonPositiveGain { from: 0, to: 0 });
    }
    let log = ln(&BigReal::from(p.value()), ctx)?;
    Ok(ctx.div(&log, h_star)?)
}

fn receive(
    j: usize,
    p_own: u64,
    observation: BigReal,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
) -> FmacObservation {
    let post = post_process(&observation, ctx, &opts.tolerance(ctx));
    let mut obs = FmacObservation {
        receiver: j,
        observation,
        post_value: post.post_value,
        recovered: None,
        distance_to_integer: None,
        exponent_map: None,
        recovered_radical: None,
        failure: None,
    };
    let rounded = match post.rounded {
        Ok(r) => r,
        Err(f) => {
            obs.failure = Some(f);
            return obs;
        }
    };
    obs.distance_to_integer = Some(rounded.distance);
    let factors = if rounded.value == BigUint::from(1u32) {
        Ok(Factorization::default())
    } else {
        factorize_with(&rounded.value, &opts.factor)
    };
    obs.recovered = Some(rounded.value);
    match factors {
        Ok(f) => {
            if f.contains(p_own) {
                obs.failure = Some(RecoveryFailure::DuplicatePrime { prime: p_own });
            }
            obs.recovered_radical = Some(radical(&f));
            obs.exponent_map = Some(f);
        }
        Err(e) => obs.failure = Some(e.into()),
    }
    obs
}

/// The single simultaneous exchange: every user sends `ln(p_i) / h_star`
/// and every user receives `sum_{i != j} c_ij ln(p_i)` after cancelling its
/// own term, then exponentiates, rounds and factorizes.
///
/// Requires exact integer fading (`h_ij / h_star` integral), except under
/// the quantized model, which runs off-premise on purpose.
pub fn run_full_round<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> Result<Vec<FmacObservation>, ProtocolError> {
    run_full_round_with(primes, ch, ctx, &ProtocolOptions::default(), rng)
}

pub fn run_full_round_with<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
    rng: &mut R,
) -> Result<Vec<FmacObservation>, ProtocolError> {
    check_users(primes, ch.n_users)?;
    if !matches!(ch.model, FadingModel::Quantized { .. }) && !ch.is_integer_fading() {
        return Err(ProtocolError::NotIntegerChannel);
    }
    let signals = primes
        .iter()
        .map(|p| pre_process_full(p, &ch.h_star, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    // Noise is drawn in receiver order so the result does not depend on
    // how the post-processing below is scheduled.
    let observations: Vec<BigReal> = (0..primes.len())
        .map(|j| superpose(&signals, j, true, ch, ctx, rng))
        .collect();
    Ok(observations
        .into_par_iter()
        .enumerate()
        .map(|(j, y)| receive(j, primes[j].value(), y, ctx, opts))
        .collect())
}

/// `S = p_own * radical(exponent_map)`.
pub fn recover_secret_full(
    p_own: &PrimeInput,
    obs: &FmacObservation,
) -> Result<BigUint, RecoveryFailure> {
    if let Some(f) = &obs.failure {
        return Err(f.clone());
    }
    let rad = obs
        .recovered_radical
        .as_ref()
        .expect("successful observation carries a radical");
    Ok(rad * p_own.value())
}

/// One full-duplex exchange and every user's secret.
pub fn run_protocol_fmac<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> Result<ProtocolTranscript, ProtocolError> {
    run_protocol_fmac_with(primes, ch, ctx, &ProtocolOptions::default(), rng)
}

pub fn run_protocol_fmac_with<R: Rng + ?Sized>(
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
    opts: &ProtocolOptions,
    rng: &mut R,
) -> Result<ProtocolTranscript, ProtocolError> {
    let observations = run_full_round_with(primes, ch, ctx, opts, rng)?;
    let per_user_secret = observations
        .iter()
        .zip(primes)
        .map(|(obs, p)| UserSecret::from_result(obs.receiver, recover_secret_full(p, obs)))
        .collect();
    Ok(ProtocolTranscript {
        protocol: ProtocolKind::Fmac,
        n_users: primes.len(),
        rounds_used: 1,
        rounds: observations.into_iter().map(RoundEntry::Fmac).collect(),
        per_user_secret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::numerics::prime_product;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn primes(v: &[u64]) -> Vec<PrimeInput> {
        v.iter().map(|&p| PrimeInput::new(p).unwrap()).collect()
    }

    fn r(s: &str) -> BigReal {
        s.parse().unwrap()
    }

    fn integer_channel(c: &[&[u32]], h_star: &str) -> ChannelState {
        let n = c.len();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ch = draw_channel(
            n,
            FadingModel::Integer { c_max: 1 },
            &r(h_star),
            &r("0"),
            &mut rng,
        )
        .unwrap();
        for (i, row) in c.iter().enumerate() {
            for (j, &cij) in row.iter().enumerate() {
                if i != j {
                    ch.h[i][j] = &BigReal::from(cij) * &ch.h_star;
                }
            }
        }
        ch.coefficients = Some(c.iter().map(|row| row.to_vec()).collect());
        ch
    }

    #[test]
    fn pre_processing() {
        let ctx = PrecisionContext::new(40).unwrap();
        let three = pre_process_full(&PrimeInput::new(3).unwrap(), &r("0.5"), &ctx).unwrap();
        assert_eq!(three, ctx.mul(&r("2"), &ln(&r("3"), &ctx).unwrap()));
        assert!(pre_process_full(&PrimeInput::new(3).unwrap(), &r("0"), &ctx).is_err());
    }

    #[test]
    fn two_users_squared() {
        let ctx = PrecisionContext::new(32).unwrap();
        let ch = integer_channel(&[&[0, 2], &[2, 0]], "1");
        let obs = run_full_round(
            &primes(&[3, 5]),
            &ch,
            &ctx,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(obs[1].recovered, Some(BigUint::from(9u32)));
        assert_eq!(obs[1].exponent_map.as_ref().unwrap().factors(), &[(3, 2)]);
        assert_eq!(obs[0].exponent_map.as_ref().unwrap().factors(), &[(5, 2)]);
    }

    #[test]
    fn three_users_product() {
        let ctx = PrecisionContext::new(32).unwrap();
        let ch = integer_channel(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]], "0.5");
        let ps = primes(&[2, 3, 5]);
        let t = run_protocol_fmac(&ps, &ch, &ctx, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let first = t.fmac_observations().next().unwrap();
        assert_eq!(
            first.exponent_map.as_ref().unwrap().factors(),
            &[(3, 1), (5, 1)]
        );
        assert_eq!(first.recovered_radical, Some(BigUint::from(15u32)));
        assert_eq!(t.rounds_used, 1);
        assert_eq!(t.secrets(), vec![Some(prime_product(&ps)); 3]);
    }

    #[test]
    fn radical_reassembly() {
        let ctx = PrecisionContext::new(32).unwrap();
        let ch = integer_channel(&[&[0, 1, 1], &[4, 0, 1], &[1, 1, 0]], "1");
        let ps = primes(&[2, 3, 5]);
        let obs = run_full_round(&ps, &ch, &ctx, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        // Receiver 0 hears 3^4 * 5^1.
        assert_eq!(
            obs[0].exponent_map.as_ref().unwrap().factors(),
            &[(3, 4), (5, 1)]
        );
        assert_eq!(
            recover_secret_full(&ps[0], &obs[0]).unwrap(),
            BigUint::from(30u32)
        );
    }

    #[test]
    fn duplicate_primes_detected() {
        let ctx = PrecisionContext::new(32).unwrap();
        let ch = integer_channel(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]], "1");
        let ps = primes(&[3, 3, 5]);
        let t = run_protocol_fmac(&ps, &ch, &ctx, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(
            t.per_user_secret[0].failure,
            Some(RecoveryFailure::DuplicatePrime { prime: 3 })
        );
        assert_eq!(
            t.per_user_secret[1].failure,
            Some(RecoveryFailure::DuplicatePrime { prime: 3 })
        );
    }

    #[test]
    fn rejects_continuous_channel() {
        let ctx = PrecisionContext::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = draw_channel(
            2,
            FadingModel::Rayleigh { scale: 1.0 },
            &r("1"),
            &r("0"),
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            run_full_round(&primes(&[2, 3]), &ch, &ctx, &mut rng).unwrap_err(),
            ProtocolError::NotIntegerChannel
        );
    }
}
