#![allow(dead_code)]

pub mod oracle;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmac_keygen::numerics::PrimeInput;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn primes(values: &[u64]) -> Vec<PrimeInput> {
    values
        .iter()
        .map(|&p| PrimeInput::new(p).unwrap())
        .collect()
}

/// Plain trial division up to sqrt(n).
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Naive product, folded one factor at a time.
pub fn exact_product(values: impl IntoIterator<Item = u64>) -> BigUint {
    values
        .into_iter()
        .fold(BigUint::from(1u32), |acc, p| acc * BigUint::from(p))
}

pub fn product_of(primes: &[PrimeInput]) -> BigUint {
    exact_product(primes.iter().map(|p| p.value()))
}

/// Small primes by sieve-free search, for building test sets.
pub fn primes_between(lo: u64, count: usize) -> Vec<u64> {
    (lo..).filter(|&n| is_prime_trial(n)).take(count).collect()
}
