mod common;

use common::{primes, product_of, rng};
use num_bigint::BigUint;
use proptest::prelude::*;
use wmac_keygen::channel::{draw_channel, estimate_csi, ChannelState, CsiModel, FadingModel};
use wmac_keygen::keyderive::group_agreement;
use wmac_keygen::numerics::{BigReal, PrecisionContext, PrimeInput};
use wmac_keygen::protocol::{
    run_full_round, run_protocol_fmac, run_protocol_hmac, run_protocol_hmac_with, run_round,
    sample_distinct_primes, ProtocolError, ProtocolKind, ProtocolOptions, RecoveryFailure,
};

/// Smallest precision whose integer ceiling holds a `d`-digit product.
fn precision_for(d: u64) -> u32 {
    let need = ((d + 5) * 4).div_ceil(3) + 4;
    need.max(32) as u32
}

/// A noiseless channel with `h_ij = c_ij * h_star`.
fn integer_channel(c: &[Vec<u32>], h_star: &BigReal) -> ChannelState {
    let n = c.len();
    let h = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigReal::zero()
                    } else {
                        &BigReal::from(c[i][j]) * h_star
                    }
                })
                .collect()
        })
        .collect();
    ChannelState {
        n_users: n,
        model: FadingModel::Integer { c_max: 8 },
        h,
        h_eve: vec![h_star.clone(); n],
        h_star: h_star.clone(),
        noise_variance: BigReal::zero(),
        coefficients: Some(c.to_vec()),
    }
}

fn rayleigh(n: usize, seed: u64) -> ChannelState {
    draw_channel(
        n,
        FadingModel::Rayleigh { scale: 1.0 },
        &BigReal::one(),
        &BigReal::zero(),
        &mut rng(seed),
    )
    .unwrap()
}

#[test]
fn two_user_round_recovers_other_prime() {
    let ctx = PrecisionContext::new(64).unwrap();
    let ps = primes(&[100_003, 100_019]);
    let ch = rayleigh(2, 3);
    let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng(0)).unwrap();
    let round = run_round(1, &ps, &ch, &csi, &ctx, &mut rng(0)).unwrap();
    assert_eq!(round.recovered, Some(BigUint::from(100_003u32)));
}

#[test]
fn eight_users_rayleigh_agree() {
    let ctx = PrecisionContext::new(128).unwrap();
    let mut g = rng(8);
    let ps = sample_distinct_primes(8, 6, &mut g).unwrap().primes;
    let ch = rayleigh(8, 9);
    let csi = estimate_csi(&ch, CsiModel::Perfect, &mut g).unwrap();
    let t = run_protocol_hmac(&ps, &ch, &csi, &ctx, &mut g).unwrap();
    assert_eq!(t.rounds_used, 8);
    assert_eq!(t.protocol, ProtocolKind::Hmac);
    let want = product_of(&ps);
    assert!(t.secrets().iter().all(|s| s.as_ref() == Some(&want)));
}

#[test]
fn csi_error_causes_measurable_failures() {
    let ctx = PrecisionContext::new(64).unwrap();
    let opts = ProtocolOptions {
        tolerance: Some("1e-6".parse().unwrap()),
        ..Default::default()
    };
    let mut failed = 0;
    for seed in 0..100 {
        let mut g = rng(seed);
        let ps = sample_distinct_primes(3, 6, &mut g).unwrap().primes;
        let ch = rayleigh(3, seed + 1000);
        let csi = estimate_csi(&ch, CsiModel::Relative { epsilon: 0.1 }, &mut g).unwrap();
        let t = run_protocol_hmac_with(&ps, &ch, &csi, &ctx, &opts, &mut g).unwrap();
        failed += usize::from(t.failure_count() > 0);
    }
    assert!(failed > 50, "{failed} of 100 trials failed");
}

#[test]
fn noise_reported_not_fatal() {
    let ctx = PrecisionContext::new(128).unwrap();
    let mut failures = 0;
    for seed in 0..10 {
        let mut g = rng(seed);
        let ps = sample_distinct_primes(8, 6, &mut g).unwrap().primes;
        let ch = draw_channel(
            8,
            FadingModel::Rayleigh { scale: 1.0 },
            &BigReal::one(),
            &"0.01".parse().unwrap(),
            &mut g,
        )
        .unwrap();
        let csi = estimate_csi(&ch, CsiModel::Perfect, &mut g).unwrap();
        let t = run_protocol_hmac(&ps, &ch, &csi, &ctx, &mut g).unwrap();
        failures += t.failure_count();
        assert!(!group_agreement(&t.secrets()).agreed);
    }
    assert!(failures > 0);
}

#[test]
fn full_duplex_two_users_square() {
    let ctx = PrecisionContext::new(40).unwrap();
    let ch = integer_channel(&[vec![0, 2], vec![2, 0]], &"0.5".parse().unwrap());
    let obs = run_full_round(&primes(&[3, 5]), &ch, &ctx, &mut rng(0)).unwrap();
    assert_eq!(obs[1].recovered, Some(BigUint::from(9u32)));
    assert_eq!(obs[1].exponent_map.as_ref().unwrap().factors(), &[(3, 2)]);
    assert_eq!(obs[0].recovered, Some(BigUint::from(25u32)));
}

#[test]
fn full_duplex_six_users() {
    let ctx = PrecisionContext::new(256).unwrap();
    let mut g = rng(6);
    let ps = sample_distinct_primes(6, 5, &mut g).unwrap().primes;
    let ch = draw_channel(
        6,
        FadingModel::Integer { c_max: 8 },
        &"0.5".parse().unwrap(),
        &BigReal::zero(),
        &mut g,
    )
    .unwrap();
    let t = run_protocol_fmac(&ps, &ch, &ctx, &mut g).unwrap();
    assert_eq!(t.rounds_used, 1);
    let want = product_of(&ps);
    assert!(t.secrets().iter().all(|s| s.as_ref() == Some(&want)));
}

/// With `c_max = 8` a twelve-user product averages about 250 digits, above
/// the 188-digit ceiling of a 256-digit context; receivers must say so.
#[test]
fn twelve_users_at_256_digits() {
    let ctx = PrecisionContext::new(256).unwrap();
    for (c_max, seed) in [(2u32, 0u64), (8, 1)] {
        let mut g = rng(seed);
        let ps = sample_distinct_primes(12, 5, &mut g).unwrap().primes;
        let ch = draw_channel(
            12,
            FadingModel::Integer { c_max },
            &BigReal::one(),
            &BigReal::zero(),
            &mut g,
        )
        .unwrap();
        let t = run_protocol_fmac(&ps, &ch, &ctx, &mut g).unwrap();
        let want = product_of(&ps);
        for u in &t.per_user_secret {
            match &u.secret {
                Some(s) => assert_eq!(s, &want),
                None => assert!(matches!(u.failure, Some(RecoveryFailure::Overflow { .. }))),
            }
        }
        if c_max == 2 {
            assert!(group_agreement(&t.secrets()).agreed);
        } else {
            assert!(t.failure_count() > 0);
        }
    }
}

#[test]
fn duplicate_prime_detected() {
    let ctx = PrecisionContext::new(64).unwrap();
    let ch = integer_channel(
        &[vec![0, 1, 1], vec![1, 0, 2], vec![1, 2, 0]],
        &BigReal::one(),
    );
    let ps = primes(&[101, 101, 103]);
    let obs = run_full_round(&ps, &ch, &ctx, &mut rng(0)).unwrap();
    assert_eq!(
        obs[0].failure,
        Some(RecoveryFailure::DuplicatePrime { prime: 101 })
    );
    assert_eq!(
        obs[1].failure,
        Some(RecoveryFailure::DuplicatePrime { prime: 101 })
    );
    assert!(obs[2].failure.is_none());
}

#[test]
fn full_duplex_needs_integer_fading() {
    let ctx = PrecisionContext::new(64).unwrap();
    let ch = rayleigh(3, 0);
    assert!(matches!(
        run_full_round(&primes(&[2, 3, 5]), &ch, &ctx, &mut rng(0)),
        Err(ProtocolError::NotIntegerChannel)
    ));
}

#[test]
fn oversized_products_overflow_loudly() {
    let ctx = PrecisionContext::new(64).unwrap();
    let mut g = rng(1);
    let ps = sample_distinct_primes(12, 5, &mut g).unwrap().primes;
    let c = vec![vec![8u32; 12]; 12];
    let t = run_protocol_fmac(&ps, &integer_channel(&c, &BigReal::one()), &ctx, &mut g).unwrap();
    for u in &t.per_user_secret {
        assert!(u.secret.is_none());
        assert!(matches!(u.failure, Some(RecoveryFailure::Overflow { .. })));
    }
}

fn distinct(n: usize, digits: u32, seed: u64) -> Vec<PrimeInput> {
    sample_distinct_primes(n, digits, &mut rng(seed))
        .unwrap()
        .primes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn half_duplex_recovers_product(n in 2usize..=16, digits in 2u32..=8, seed: u64) {
        let ps = distinct(n, digits, seed);
        let ctx = PrecisionContext::new(precision_for(u64::from(digits) * n as u64)).unwrap();
        let ch = rayleigh(n, seed ^ 1);
        let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng(0)).unwrap();
        let t = run_protocol_hmac(&ps, &ch, &csi, &ctx, &mut rng(0)).unwrap();
        prop_assert_eq!(t.rounds_used, n);
        let want = product_of(&ps);
        for s in t.secrets() {
            prop_assert_eq!(s.as_ref(), Some(&want));
        }
    }

    #[test]
    fn user_order_does_not_change_secret(n in 2usize..=8, seed: u64, shift in 1usize..8) {
        let ps = distinct(n, 6, seed);
        let mut rotated = ps.clone();
        rotated.rotate_left(shift % n);
        let ctx = PrecisionContext::new(precision_for(6 * n as u64)).unwrap();
        let ch = rayleigh(n, seed ^ 2);
        let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng(0)).unwrap();
        let a = run_protocol_hmac(&ps, &ch, &csi, &ctx, &mut rng(0)).unwrap();
        let b = run_protocol_hmac(&rotated, &ch, &csi, &ctx, &mut rng(0)).unwrap();
        prop_assert_eq!(a.secrets(), b.secrets());
    }

    #[test]
    fn listener_prime_never_heard(n in 2usize..=8, seed: u64, pick: prop::sample::Index) {
        let ps = distinct(n, 6, seed);
        let j = pick.index(n);
        let mut swapped = ps.clone();
        // A sentinel from outside the sampled digit range.
        swapped[j] = PrimeInput::new(99_991).unwrap();
        let ctx = PrecisionContext::new(precision_for(6 * n as u64)).unwrap();
        let ch = rayleigh(n, seed ^ 3);
        let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng(0)).unwrap();
        let a = run_round(j, &ps, &ch, &csi, &ctx, &mut rng(0)).unwrap();
        let b = run_round(j, &swapped, &ch, &csi, &ctx, &mut rng(0)).unwrap();
        prop_assert!(a.recovered.is_some());
        prop_assert_eq!(a.recovered, b.recovered);
        prop_assert_eq!(a.observation, b.observation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_duplex_recovers_product_and_exponents(n in 2usize..=12, c_max in 1u32..=8, digits in 2u32..=6, seed: u64) {
        let ps = distinct(n, digits, seed);
        let ch = draw_channel(n, FadingModel::Integer { c_max }, &"0.5".parse().unwrap(), &BigReal::zero(), &mut rng(seed ^ 4)).unwrap();
        let widest: u64 = (0..n)
            .map(|j| (0..n).filter(|&i| i != j).map(|i| u64::from(ch.coefficient(i, j).unwrap() * digits)).sum())
            .max()
            .unwrap();
        let ctx = PrecisionContext::new(precision_for(widest)).unwrap();
        let t = run_protocol_fmac(&ps, &ch, &ctx, &mut rng(0)).unwrap();
        prop_assert_eq!(t.rounds_used, 1);
        let want = product_of(&ps);
        for s in t.secrets() {
            prop_assert_eq!(s.as_ref(), Some(&want));
        }
        for obs in t.fmac_observations() {
            let map = obs.exponent_map.as_ref().unwrap();
            prop_assert!(!map.contains(ps[obs.receiver].value()));
            for (i, p) in ps.iter().enumerate() {
                if i != obs.receiver {
                    prop_assert_eq!(map.exponent_of(p.value()), ch.coefficient(i, obs.receiver));
                }
            }
        }
    }

    #[test]
    fn never_silently_wrong(n in 2usize..=12, c_max in 1u32..=8, digits in 16u32..=160, seed: u64) {
        let ps = distinct(n, 5, seed);
        let ch = draw_channel(n, FadingModel::Integer { c_max }, &BigReal::one(), &BigReal::zero(), &mut rng(seed ^ 5)).unwrap();
        let ctx = PrecisionContext::new(digits).unwrap();
        let t = run_protocol_fmac(&ps, &ch, &ctx, &mut rng(0)).unwrap();
        let want = product_of(&ps);
        for (obs, u) in t.fmac_observations().zip(&t.per_user_secret) {
            match &u.secret {
                Some(s) => prop_assert_eq!(s, &want),
                None => {
                    let over = obs.post_value.as_ref().is_none_or(|v| v.adjusted_exponent() >= ctx.integer_ceiling_exponent());
                    prop_assert!(
                        !over || matches!(u.failure, Some(RecoveryFailure::Overflow { .. })),
                        "above the ceiling without an overflow report: {:?}", u.failure
                    );
                }
            }
        }
    }
}
