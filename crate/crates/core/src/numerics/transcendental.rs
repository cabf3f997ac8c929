//! Natural logarithm and exponential on [`BigReal`].
//!
//! Both kernels work on binary fixed-point integers (`v / 2^bits`) at 1.5x
//! the context precision plus guard bits, and round once into a decimal
//! result. `exp` reduces by `k * ln 10` so the power of ten lands exactly in
//! the decimal exponent, then by `2^-m` before the Taylor series. `ln` is a
//! Newton iteration on `exp` with the precision doubled at each step.

use std::cell::RefCell;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bigreal::pow10_uint;
use super::{BigReal, NumericsError, PrecisionContext};

const LOG2_10: f64 = std::f64::consts::LOG2_10;
const LN_10: f64 = std::f64::consts::LN_10;

thread_local! {
    static LN10_CACHE: RefCell<Option<(u32, BigInt)>> = const { RefCell::new(None) };
}

fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * LOG2_10).ceil() as u32 + 32
}

fn log2_ceil(k: u64) -> u32 {
    64 - k.leading_zeros()
}

/// `round(x * 10^shift10 * 2^bits)`.
fn to_fixed(x: &BigReal, shift10: i64, bits: u32) -> BigInt {
    let e = x.exponent() + shift10;
    let m = BigInt::from(x.mantissa().clone()) << bits;
    let mag = if e >= 0 {
        m * BigInt::from(pow10_uint(e as u64))
    } else {
        let d = BigInt::from(pow10_uint((-e) as u64));
        (m + (&d >> 1u32)) / d
    };
    if x.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Correctly rounded decimal image of `v / 2^bits * 10^shift10`.
fn from_fixed(v: &BigInt, bits: u32, shift10: i64, digits: u32) -> BigReal {
    if v.is_zero() {
        return BigReal::zero();
    }
    let negative = v.sign() == Sign::Minus;
    let mag = v.abs().to_biguint().expect("absolute value");
    let approx_log10 = (mag.bits() as f64 - f64::from(bits)) * std::f64::consts::LOG10_2;
    let scale = (i64::from(digits) + 3 - approx_log10.floor() as i64).max(0);
    let num = mag * pow10_uint(scale as u64);
    let q = &num >> bits;
    let sticky = num != (&q << bits);
    let m = q * 10u32 + u32::from(sticky);
    BigReal::new(negative, m, shift10 - scale - 1).round_to_digits(digits)
}

fn fixed_to_f64(v: &BigInt, bits: u32) -> f64 {
    let b = v.bits();
    if b > 60 {
        let top = (v >> (b - 60) as u32).to_f64().unwrap_or(0.0);
        top * 2f64.powi(b as i32 - 60 - bits as i32)
    } else {
        v.to_f64().unwrap_or(0.0) * 2f64.powi(-(bits as i32))
    }
}

fn rescale(v: &BigInt, from: u32, to: u32) -> BigInt {
    if to >= from {
        v << (to - from)
    } else {
        v >> (from - to)
    }
}

/// `exp(r)` for a fixed-point `r` of moderate magnitude.
fn exp_fixed(r: &BigInt, bits: u32) -> BigInt {
    let halvings = ((f64::from(bits)).sqrt() as u32).max(4);
    let wp = bits + halvings + 24;
    let t = (r << (wp - bits)) >> halvings;
    let one = BigInt::one() << wp;
    let mut sum = one.clone();
    let mut term = one;
    let mut k = 1u32;
    loop {
        term = (&term * &t) >> wp;
        term /= k;
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..halvings {
        sum = (&sum * &sum) >> wp;
    }
    sum >> (wp - bits)
}

/// `ln(x)` for a positive fixed-point `x`.
fn ln_fixed(x: &BigInt, bits: u32) -> BigInt {
    const SEED_BITS: u32 = 48;
    let seed = fixed_to_f64(x, bits).ln();
    let mut y = BigInt::from((seed * 2f64.powi(SEED_BITS as i32)).round() as i64);
    let mut prec = SEED_BITS;

    let mut schedule = Vec::new();
    let mut p = bits;
    while p > SEED_BITS {
        schedule.push(p);
        p = p / 2 + 8;
    }
    schedule.reverse();

    for target in schedule {
        let wp = target + 16;
        let y_w = rescale(&y, prec, wp);
        let x_w = rescale(x, bits, wp);
        let e = exp_fixed(&-&y_w, wp);
        let correction = ((&x_w * &e) >> wp) - (BigInt::one() << wp);
        y = y_w + correction;
        prec = wp;
    }
    rescale(&y, prec, bits)
}

fn ln10_fixed(bits: u32) -> BigInt {
    LN10_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some((have, v)) = cache.as_ref() {
            if *have >= bits {
                return v >> (have - bits);
            }
        }
        let target = bits + 64;
        let ten = BigInt::from(10u32) << target;
        let v = ln_fixed(&ten, target);
        let out = &v >> (target - bits);
        *cache = Some((target, v));
        out
    })
}

/// Natural logarithm, accurate to within 2 ulp at `ctx.digits()`.
pub fn ln(x: &BigReal, ctx: &PrecisionContext) -> Result<BigReal, NumericsError> {
    if !x.is_positive() {
        return Err(NumericsError::NonPositiveInput(x.to_string()));
    }
    let one = BigReal::one();
    if *x == one {
        return Ok(BigReal::zero());
    }
    let bits = bits_for_digits(ctx.working_digits());
    let delta = x - &one;
    if delta.abs() < "0.5".parse().expect("literal") {
        // ln x ~ x - 1 near one: widen so the absolute error stays relative.
        let extra = ((-delta.adjusted_exponent()).max(0) as f64 * LOG2_10).ceil() as u32 + 8;
        let b = bits + extra;
        let y = ln_fixed(&to_fixed(x, 0, b), b);
        return Ok(from_fixed(&y, b, 0, ctx.digits()));
    }
    let k = x.adjusted_exponent();
    let b = bits + log2_ceil(k.unsigned_abs() + 1) + 4;
    let mut y = ln_fixed(&to_fixed(x, -k, b), b);
    if k != 0 {
        y += ln10_fixed(b) * BigInt::from(k);
    }
    Ok(from_fixed(&y, b, 0, ctx.digits()))
}

/// Exponential, accurate to within 2 ulp at `ctx.digits()`.
pub fn exp(x: &BigReal, ctx: &PrecisionContext) -> Result<BigReal, NumericsError> {
    if x.is_zero() {
        return Ok(BigReal::one());
    }
    let approx = x.to_f64();
    let bound = ctx.max_exponent() as f64 * LN_10;
    if !approx.is_finite() || approx.abs() > bound * 1.01 + 1.0 {
        return Err(NumericsError::Overflow {
            exponent: if approx.is_finite() {
                (approx / LN_10) as i64
            } else {
                i64::MAX
            },
            limit: ctx.max_exponent(),
        });
    }
    let k = (approx / LN_10).round() as i64;
    if k.abs() > ctx.max_exponent() {
        return Err(NumericsError::Overflow {
            exponent: k,
            limit: ctx.max_exponent(),
        });
    }
    let bits = bits_for_digits(ctx.working_digits());
    let kb = log2_ceil(k.unsigned_abs() + 1) + 4;
    let b = bits + kb;
    let mut r = to_fixed(x, 0, b);
    if k != 0 {
        r -= ln10_fixed(b) * BigInt::from(k);
    }
    let r = r >> kb;
    let e = exp_fixed(&r, bits);
    Ok(from_fixed(&e, bits, k, ctx.digits()))
}

/// `base^exponent` for a positive base.
pub fn pow(
    base: &BigReal,
    exponent: &BigReal,
    ctx: &PrecisionContext,
) -> Result<BigReal, NumericsError> {
    let wide = PrecisionContext::new(ctx.working_digits())?.with_max_exponent(ctx.max_exponent());
    let log = ln(base, &wide)?;
    let y = wide.mul(&log, exponent);
    let out = exp(&y, &wide)?;
    Ok(ctx.round(&out))
}
