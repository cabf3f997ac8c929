use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::montgomery::{abs_diff, Montgomery};
use super::primes::{is_prime_u64, is_probable_prime, mul_mod, small_primes};
use super::NumericsError;

/// Effort limits for [`factorize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorConfig {
    /// Trial-divide by every prime up to this bound before Pollard-rho.
    pub trial_bound: u32,
    /// Total Pollard-rho iterations allowed across the whole factorization.
    pub rho_budget: u64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            trial_bound: 10_000,
            rho_budget: 1 << 22,
        }
    }
}

fn trial_primes(bound: u32) -> Cow<'static, [u32]> {
    static DEFAULT: OnceLock<Vec<u32>> = OnceLock::new();
    let table = DEFAULT.get_or_init(|| small_primes(FactorConfig::default().trial_bound));
    if bound > FactorConfig::default().trial_bound {
        return Cow::Owned(small_primes(bound));
    }
    let end = table.partition_point(|&p| p <= bound);
    Cow::Borrowed(&table[..end])
}

/// Prime factorization, ascending by prime with distinct primes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Builds a factorization, validating order, distinctness and primality.
    pub fn new(factors: Vec<(u64, u32)>) -> Result<Self, NumericsError> {
        let invalid = |why: &str| NumericsError::InvalidFactorization(why.to_string());
        for w in factors.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(invalid("primes must be strictly ascending"));
            }
        }
        for &(p, e) in &factors {
            if e == 0 {
                return Err(invalid("exponents must be positive"));
            }
            if !is_prime_u64(p) {
                return Err(NumericsError::NotPrime(p));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn exponent_of(&self, prime: u64) -> Option<u32> {
        self.factors
            .binary_search_by_key(&prime, |&(p, _)| p)
            .ok()
            .map(|i| self.factors[i].1)
    }

    pub fn contains(&self, prime: u64) -> bool {
        self.exponent_of(prime).is_some()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The factored integer, `prod p^e`.
    pub fn product(&self) -> BigUint {
        self.factors
            .iter()
            .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e))
    }
}

/// Product of the distinct primes of a factorization.
pub fn radical(f: &Factorization) -> BigUint {
    f.factors
        .iter()
        .fold(BigUint::one(), |acc, &(p, _)| acc * p)
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (i, (p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{p}^{e}")?;
        }
        Ok(())
    }
}

impl FromStr for Factorization {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::Parse(s.to_string());
        let s = s.trim();
        if s == "1" {
            return Ok(Self::default());
        }
        let mut factors = Vec::new();
        for term in s.split('*') {
            let term = term.trim();
            let (p, e) = match term.split_once('^') {
                Some((p, e)) => (p.trim(), e.trim()),
                None => (term, "1"),
            };
            factors.push((p.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?));
        }
        Self::new(factors)
    }
}

impl Serialize for Factorization {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Factorization {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Factorize with the default effort budget.
pub fn factorize(n: &BigUint) -> Result<Factorization, NumericsError> {
    factorize_with(n, &FactorConfig::default())
}

/// Trial division up to `cfg.trial_bound`, then Brent's Pollard-rho with
/// Miller-Rabin checks on every cofactor. Prime factors above 2^64 and
/// cofactors that outlast the rho budget are reported as
/// [`NumericsError::FactorBoundExceeded`].
pub fn factorize_with(n: &BigUint, cfg: &FactorConfig) -> Result<Factorization, NumericsError> {
    if n < &BigUint::from(2u32) {
        return Err(NumericsError::InvalidFactorization(format!(
            "cannot factor {n}"
        )));
    }
    let mut found: BTreeMap<u64, u32> = BTreeMap::new();
    let mut rest = n.clone();
    let primes = trial_primes(cfg.trial_bound);
    let mut start = 0;
    while start < primes.len() && !rest.is_one() {
        // One big remainder per batch of primes whose product fits a u64.
        let mut batch = 1u64;
        let mut end = start;
        while end < primes.len() {
            match batch.checked_mul(u64::from(primes[end])) {
                Some(b) => batch = b,
                None => break,
            }
            end += 1;
        }
        let residue = (&rest % batch).to_u64().expect("below batch");
        for &p in &primes[start..end] {
            if !residue.is_multiple_of(u64::from(p)) {
                continue;
            }
            loop {
                let (q, r) = rest.div_rem(&BigUint::from(p));
                if !r.is_zero() {
                    break;
                }
                *found.entry(u64::from(p)).or_default() += 1;
                rest = q;
            }
        }
        start = end;
    }

    let mut budget = cfg.rho_budget;
    let mut pending = vec![rest];
    while let Some(c) = pending.pop() {
        if c.is_one() {
            continue;
        }
        let bound_exceeded = || NumericsError::FactorBoundExceeded {
            cofactor: c.to_string(),
        };
        let d = match c.to_u64() {
            Some(small) if is_prime_u64(small) => {
                *found.entry(small).or_default() += 1;
                continue;
            }
            Some(_) => split(&c, &mut budget),
            None => {
                // Anything above 2^64 must split; only pay for a primality
                // test when a short rho probe comes back empty.
                let mut probe = budget.min(RHO_PROBE);
                budget -= probe;
                match split(&c, &mut probe) {
                    Some(d) => {
                        budget += probe;
                        Some(d)
                    }
                    None if is_probable_prime(&c) => return Err(bound_exceeded()),
                    None => split(&c, &mut budget),
                }
            }
        };
        let d = d.ok_or_else(bound_exceeded)?;
        let other = &c / &d;
        pending.push(d);
        pending.push(other);
    }
    Ok(Factorization {
        factors: found.into_iter().collect(),
    })
}

/// A non-trivial divisor of composite `n`, or `None` when the budget runs out.
fn split(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if let Some(root) = exact_sqrt(n) {
        return Some(root);
    }
    if let Some(small) = n.to_u64() {
        for c in 1..u64::MAX {
            if *budget == 0 {
                return None;
            }
            if let Some(d) = rho_u64(small, c, budget) {
                return Some(BigUint::from(d));
            }
        }
        return None;
    }
    for c in 1u32.. {
        if *budget == 0 {
            return None;
        }
        if let Some(d) = rho_big(n, c, budget) {
            return Some(d);
        }
    }
    None
}

fn exact_sqrt(n: &BigUint) -> Option<BigUint> {
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

const RHO_BATCH: u64 = 128;
const RHO_PROBE: u64 = 1 << 13;

fn rho_u64(n: u64, c: u64, budget: &mut u64) -> Option<u64> {
    let f = |x: u64| ((u128::from(mul_mod(x, x, n)) + u128::from(c)) % u128::from(n)) as u64;
    let mut y = 2u64 % n;
    let mut x = y;
    let mut ys = y;
    let mut g = 1u64;
    let mut q = 1u64;
    let mut r = 1u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            let steps = RHO_BATCH.min(r - k);
            for _ in 0..steps {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            *budget = budget.saturating_sub(steps);
            g = q.gcd(&n);
            k += steps;
            if *budget == 0 && g == 1 {
                return None;
            }
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn rho_big(n: &BigUint, c: u32, budget: &mut u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let mont = Montgomery::new(n);
    let k = mont.limbs();
    let mut scratch = Vec::with_capacity(k + 2);
    let mut tmp = vec![0u64; k];
    // x -> x^2 R^-1 + c is as good a rho map as x^2 + c.
    let f = |x: &mut Vec<u64>, scratch: &mut Vec<u64>, tmp: &mut Vec<u64>| {
        mont.mul(x, x, tmp, scratch);
        std::mem::swap(x, tmp);
        mont.add_small(x, u64::from(c));
    };
    let mut y = mont.element(&BigUint::from(2u32));
    let mut x = y.clone();
    let mut ys = y.clone();
    let mut q = mont.element(&BigUint::one());
    let mut d = vec![0u64; k];
    let mut g = BigUint::one();
    let mut r = 1u64;
    while g.is_one() {
        x.clone_from(&y);
        for _ in 0..r {
            f(&mut y, &mut scratch, &mut tmp);
        }
        let mut done = 0;
        while done < r && g.is_one() {
            ys.clone_from(&y);
            let steps = RHO_BATCH.min(r - done);
            for _ in 0..steps {
                f(&mut y, &mut scratch, &mut tmp);
                abs_diff(&x, &y, &mut d);
                mont.mul(&q, &d, &mut tmp, &mut scratch);
                std::mem::swap(&mut q, &mut tmp);
            }
            *budget = budget.saturating_sub(steps);
            g = Montgomery::to_biguint(&q).gcd(n);
            done += steps;
            if *budget == 0 && g.is_one() {
                return None;
            }
        }
        r *= 2;
    }
    if &g == n {
        loop {
            f(&mut ys, &mut scratch, &mut tmp);
            abs_diff(&x, &ys, &mut d);
            g = Montgomery::to_biguint(&d).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (&g != n).then_some(g)
}
