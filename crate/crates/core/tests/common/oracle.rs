//! Slow reference ln/exp on scaled big integers: a value `v` is held as
//! `round(v * 10^scale)`. Plain series, no shared code with the library.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use wmac_keygen::numerics::BigReal;

#[derive(Clone, Copy)]
pub struct Fixed {
    pub scale: u32,
}

impl Fixed {
    pub fn new(scale: u32) -> Self {
        Self { scale }
    }

    fn unit(&self) -> BigInt {
        BigInt::from(10u32).pow(self.scale)
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b).div_floor(&self.unit())
    }

    fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * self.unit()).div_floor(b)
    }

    /// Exact when the value has at most `scale` fractional digits.
    pub fn read(self, x: &BigReal) -> BigInt {
        let m = BigInt::from_biguint(
            if x.is_negative() {
                Sign::Minus
            } else {
                Sign::Plus
            },
            x.mantissa().clone(),
        );
        let shift = x.exponent() + i64::from(self.scale);
        if shift >= 0 {
            m * BigInt::from(10u32).pow(shift as u32)
        } else {
            m.div_floor(&BigInt::from(10u32).pow((-shift) as u32))
        }
    }

    pub fn write(self, v: &BigInt) -> BigReal {
        BigReal::new(
            v.is_negative(),
            v.magnitude().clone(),
            -i64::from(self.scale),
        )
    }

    /// 2 * atanh(z) = 2 * sum z^(2k+1) / (2k+1).
    fn two_atanh(&self, z: &BigInt) -> BigInt {
        let z2 = self.mul(z, z);
        let mut power = z.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u32;
        while !power.is_zero() {
            sum += &power / BigInt::from(k);
            power = self.mul(&power, &z2);
            k += 2;
        }
        sum * 2
    }

    pub fn ln2(&self) -> BigInt {
        let third = self.unit() / BigInt::from(3u32);
        self.two_atanh(&third)
    }

    pub fn ln(&self, x: &BigInt) -> BigInt {
        assert!(x.is_positive(), "ln of a non-positive value");
        let one = self.unit();
        let two = &one * 2;
        let mut y = x.clone();
        let mut k = 0i64;
        while y >= two {
            y = y.div_floor(&BigInt::from(2u32));
            k += 1;
        }
        while y < one {
            y *= 2;
            k -= 1;
        }
        let z = self.div(&(&y - &one), &(&y + &one));
        self.two_atanh(&z) + self.ln2() * k
    }

    pub fn exp(&self, x: &BigInt) -> BigInt {
        let one = self.unit();
        let ln2 = self.ln2();
        // x = n ln2 + r, |r| <= ln2 / 2.
        let half: BigInt = &ln2 / 2;
        let n = (x + half).div_floor(&ln2);
        let mut r = x - &n * &ln2;
        let halvings = 12u32;
        r = r.div_floor(&BigInt::from(1u64 << halvings));
        let mut term = one.clone();
        let mut sum = one.clone();
        let mut k = 1u32;
        loop {
            term = self.mul(&term, &r) / BigInt::from(k);
            if term.is_zero() {
                break;
            }
            sum += &term;
            k += 1;
        }
        for _ in 0..halvings {
            sum = self.mul(&sum, &sum);
        }
        let n = i64::try_from(n).expect("moderate exponent");
        if n >= 0 {
            sum * BigInt::from(2u32).pow(n as u32)
        } else {
            sum.div_floor(&BigInt::from(2u32).pow((-n) as u32))
        }
    }
}

/// `ln(x)` to roughly `scale` fractional digits.
pub fn ln(x: &BigReal, scale: u32) -> BigReal {
    let f = Fixed::new(scale);
    f.write(&f.ln(&f.read(x)))
}

pub fn exp(x: &BigReal, scale: u32) -> BigReal {
    let f = Fixed::new(scale);
    f.write(&f.exp(&f.read(x)))
}

/// `|a - b|` measured in units of the last place of `reference` at
/// `digits` significant digits.
pub fn ulps(a: &BigReal, b: &BigReal, reference: &BigReal, digits: u32) -> f64 {
    let diff = (a - b).abs();
    if diff.is_zero() {
        return 0.0;
    }
    let ulp_exp = reference.adjusted_exponent() - i64::from(digits) + 1;
    let scaled = diff.scale10(-ulp_exp);
    scaled.to_f64()
}
