use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Bases that make Miller-Rabin deterministic for every 64-bit integer.
const U64_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Largest digit count a [`PrimeInput`] can carry.
pub const MAX_PRIME_DIGITS: u32 = 19;

/// Rounds used for big-integer probable-prime checks (error < 4^-32).
pub const BIG_MR_ROUNDS: usize = 32;

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &U64_WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &U64_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin over big integers; exact below 2^64, probabilistic above
/// with the first [`BIG_MR_ROUNDS`] primes as witnesses.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let witnesses = small_primes(200).into_iter().take(BIG_MR_ROUNDS);
    'witness: for a in witnesses {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `<= limit`, by sieve.
pub fn small_primes(limit: u32) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u32);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

pub fn decimal_digits(n: u64) -> u32 {
    n.checked_ilog10().map_or(1, |d| d + 1)
}

/// A user's private prime together with its public digit-count class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeInput {
    value: u64,
    digit_count: u32,
}

impl PrimeInput {
    pub fn new(value: u64) -> Result<Self, NumericsError> {
        if !is_prime_u64(value) {
            return Err(NumericsError::NotPrime(value));
        }
        Ok(Self {
            value,
            digit_count: decimal_digits(value),
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn digit_count(&self) -> u32 {
        self.digit_count
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from(self.value)
    }
}

impl TryFrom<u64> for PrimeInput {
    type Error = NumericsError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PrimeInput> for u64 {
    fn from(p: PrimeInput) -> u64 {
        p.value
    }
}

impl fmt::Display for PrimeInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Uniformly sample a prime with exactly `digit_count` decimal digits.
pub fn sample_prime<R: Rng + ?Sized>(
    digit_count: u32,
    rng: &mut R,
) -> Result<PrimeInput, NumericsError> {
    if digit_count == 0 || digit_count > MAX_PRIME_DIGITS {
        return Err(NumericsError::InvalidDigitCount(digit_count));
    }
    let lo = 10u64.pow(digit_count - 1);
    let hi = if digit_count == MAX_PRIME_DIGITS {
        u64::MAX
    } else {
        10u64.pow(digit_count)
    };
    loop {
        let candidate = rng.gen_range(lo..hi);
        if is_prime_u64(candidate) {
            return PrimeInput::new(candidate);
        }
    }
}

/// Product of a slice of primes.
pub fn prime_product(primes: &[PrimeInput]) -> BigUint {
    primes.iter().fold(BigUint::one(), |acc, p| acc * p.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trial_division_is_prime(n: u64) -> bool {
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

    #[test]
    fn matches_trial_division_below_100k() {
        for n in 0..100_000u64 {
            assert_eq!(is_prime_u64(n), trial_division_is_prime(n), "{n}");
        }
    }

    #[test]
    fn strong_pseudoprimes_rejected() {
        // 3215031751 is a strong pseudoprime to bases 2, 3, 5 and 7.
        assert!(!is_prime_u64(3_215_031_751));
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        let m61 = BigUint::from(2u32).pow(61) - 1u32;
        assert!(is_probable_prime(&m61));
        let m127 = BigUint::from(2u32).pow(127) - 1u32;
        assert!(is_probable_prime(&m127));
        assert!(!is_probable_prime(&(&m127 * &m61)));
    }

    #[test]
    fn one_digit_primes_are_enumerable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = sample_prime(1, &mut rng).unwrap();
            assert!([2, 3, 5, 7].contains(&p.value()));
            assert_eq!(p.digit_count(), 1);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_prime(6, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_prime(6, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digit_count(), 6);
    }

    #[test]
    fn six_digit_draws_pass_trial_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p = sample_prime(6, &mut rng).unwrap();
            assert!((100_000..1_000_000).contains(&p.value()));
            assert!(trial_division_is_prime(p.value()));
        }
    }

    #[test]
    fn invalid_digit_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_prime(0, &mut rng).is_err());
        assert!(sample_prime(20, &mut rng).is_err());
        assert!(PrimeInput::new(91).is_err());
    }
}
