//! Passive, noiseless eavesdropper with full protocol knowledge and the
//! public `h_star`. Only the fading realizations keep her from the key.
//!
//! Ratios are reported as the exponent Eve's post-processing actually
//! applies to each `ln p_i`: `h_eve[i] / h_hat[i][j]` for the half-duplex
//! round and `h_eve[i] / h_star` for the full-duplex exchange, so that
//! `psi_eve = prod p_i^{r_i}` in both cases.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::channel::{eve_observe_clean, ChannelState};
use crate::numerics::{
    exp, factorize_with, leading_digit_overlap, ln, pow, prime_product, radical, round_to_integer,
    BigReal, FactorConfig, PrecisionContext, PrimeInput,
};
use crate::protocol::{pre_process_full, FmacObservation, HmacRoundRecord, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveMode {
    /// One half-duplex round overheard.
    SingleRound,
    /// Two half-duplex rounds with different listeners overheard and
    /// combined.
    TwoRound,
    /// The single full-duplex exchange overheard.
    FullDuplex,
}

/// How one user's prime looks after Eve's distortion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDistortion {
    pub prime: u64,
    /// Exponent the legitimate receiver applies (`1` half-duplex, `c_ij`
    /// full-duplex).
    pub legit_exponent: u32,
    pub ratio: BigReal,
    /// `p^ratio`.
    pub distorted: BigReal,
    /// Leading digits `p^legit_exponent` and `p^ratio` share.
    pub overlap: u64,
    /// First non-zero decimal position of the scale factor between the two.
    pub scale_position: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveReport {
    pub mode: EveMode,
    pub psi_eve: BigReal,
    pub psi_legit: Option<BigReal>,
    /// Effective exponent per transmitting user, in user order.
    pub ratios: Vec<BigReal>,
    /// `r_i / c_ij` against the reference receiver (full-duplex only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v_ratios: Vec<BigReal>,
    /// `prod p_i^{c_ij}` over the legitimate receiver's terms, exact.
    #[serde(with = "crate::serde_util::biguint_string")]
    pub product_term: BigUint,
    pub error_factor: BigReal,
    pub abs_discrepancy: Option<BigReal>,
    pub digit_overlap: u64,
    pub factors: Vec<FactorDistortion>,
    /// What Eve's decision procedure reassembled, if it got that far.
    #[serde(with = "crate::serde_util::opt_biguint_string")]
    pub eve_secret: Option<BigUint>,
    pub key_equal: bool,
}

/// `E_r = 1 - prod p_i^{d_i}`.
///
/// Half-duplex deviations are `r_i - 1`; full-duplex deviations are
/// `r_i - c_ij`, with `c_jj = 0` for the receiver's own cancelled term.
pub fn error_factor(
    primes: &[PrimeInput],
    deviations: &[BigReal],
    ctx: &PrecisionContext,
) -> Result<BigReal, ProtocolError> {
    assert_eq!(primes.len(), deviations.len(), "one deviation per prime");
    let wide = PrecisionContext::new(ctx.working_digits())?.with_max_exponent(ctx.max_exponent());
    let mut sum = BigReal::zero();
    for (p, d) in primes.iter().zip(deviations) {
        if d.is_zero() {
            continue;
        }
        let log = ln(&BigReal::from(p.value()), &wide)?;
        sum = wide.add(&sum, &wide.mul(d, &log));
    }
    let product = exp(&sum, &wide)?;
    Ok(ctx.round(&wide.sub(&BigReal::one(), &product)))
}

/// Position of the first non-zero decimal of `s` in `(1, 2)`, e.g. 4 for
/// 1.000173.
pub fn first_nonzero_decimal(s: &BigReal) -> Option<u64> {
    let frac = s - &BigReal::one();
    if !frac.is_positive() || frac >= BigReal::one() {
        return None;
    }
    Some((-frac.adjusted_exponent()) as u64)
}

fn distortion(
    p: &PrimeInput,
    legit_exponent: u32,
    ratio: &BigReal,
    ctx: &PrecisionContext,
) -> Result<FactorDistortion, ProtocolError> {
    let base = BigReal::from(p.value());
    let distorted = pow(&base, ratio, ctx)?;
    let legit = BigReal::from(BigUint::from(p.value()).pow(legit_exponent));
    let shift = ctx.sub(ratio, &BigReal::from(legit_exponent));
    let scale = pow(&base, &shift.abs(), ctx)?;
    Ok(FactorDistortion {
        prime: p.value(),
        legit_exponent,
        ratio: ratio.clone(),
        overlap: leading_digit_overlap(&legit, &distorted),
        scale_position: first_nonzero_decimal(&scale),
        distorted,
    })
}

/// Eve's best single-round integer, `None` when `psi_eve` is not near one.
fn eve_round(psi_eve: &BigReal, ctx: &PrecisionContext) -> Option<BigUint> {
    if psi_eve.adjusted_exponent() >= ctx.integer_ceiling_exponent() {
        return None;
    }
    round_to_integer(psi_eve, &ctx.default_tolerance())
        .ok()
        .map(|r| r.value)
}

struct HalfView {
    psi_eve: BigReal,
    ratios: Vec<BigReal>,
    deviations: Vec<BigReal>,
    heard: Vec<PrimeInput>,
}

fn half_view(
    round: &HmacRoundRecord,
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
) -> Result<HalfView, ProtocolError> {
    let j = round.receiver;
    let dense: Vec<BigReal> = round
        .signals
        .iter()
        .map(|s| s.clone().unwrap_or_default())
        .collect();
    let y = eve_observe_clean(&dense, Some(j), ch, ctx);
    let mut ratios = Vec::new();
    let mut deviations = Vec::new();
    let mut heard = Vec::new();
    for (i, signal) in round.signals.iter().enumerate() {
        let Some(signal) = signal else { continue };
        let log = ln(&BigReal::from(primes[i].value()), ctx)?;
        let r = ctx.div(&(&ch.h_eve[i] * signal), &log)?;
        deviations.push(ctx.sub(&r, &BigReal::one()));
        ratios.push(r);
        heard.push(primes[i]);
    }
    Ok(HalfView {
        psi_eve: exp(&y, ctx)?,
        ratios,
        deviations,
        heard,
    })
}

fn half_report(
    mode: EveMode,
    view: HalfView,
    round: &HmacRoundRecord,
    eve_secret: Option<BigUint>,
    secret: &BigUint,
    ctx: &PrecisionContext,
) -> Result<EveReport, ProtocolError> {
    let error = error_factor(&view.heard, &view.deviations, ctx)?;
    let factors = view
        .heard
        .iter()
        .zip(&view.ratios)
        .map(|(p, r)| distortion(p, 1, r, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    let psi_legit = round.post_value.clone();
    Ok(EveReport {
        mode,
        abs_discrepancy: psi_legit.as_ref().map(|l| ctx.sub(l, &view.psi_eve).abs()),
        digit_overlap: psi_legit
            .as_ref()
            .map_or(0, |l| leading_digit_overlap(l, &view.psi_eve)),
        key_equal: eve_secret.as_ref() == Some(secret),
        psi_eve: view.psi_eve,
        psi_legit,
        ratios: view.ratios,
        v_ratios: Vec::new(),
        product_term: prime_product(&view.heard),
        error_factor: error,
        factors,
        eve_secret,
    })
}

/// Eve overhears round `round.receiver`. Even a perfect rounding leaves her
/// without the listener's prime, so she reports her integer as is.
pub fn eve_attack_half(
    round: &HmacRoundRecord,
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
) -> Result<EveReport, ProtocolError> {
    let view = half_view(round, primes, ch, ctx)?;
    let guess = eve_round(&view.psi_eve, ctx);
    half_report(
        EveMode::SingleRound,
        view,
        round,
        guess,
        &prime_product(primes),
        ctx,
    )
}

/// Eve overhears two rounds with different listeners: `S / p_a` and
/// `S / p_b` together give `S` as their lcm, if both round to integers.
/// The numeric fields describe the first round.
pub fn eve_attack_two_round(
    first: &HmacRoundRecord,
    second: &HmacRoundRecord,
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
) -> Result<EveReport, ProtocolError> {
    if first.receiver == second.receiver {
        return Err(ProtocolError::InvalidUsers(
            "two-round interception needs two different listeners".into(),
        ));
    }
    let a = half_view(first, primes, ch, ctx)?;
    let b = half_view(second, primes, ch, ctx)?;
    let guess = match (eve_round(&a.psi_eve, ctx), eve_round(&b.psi_eve, ctx)) {
        (Some(x), Some(y)) => Some(x.lcm(&y)),
        _ => None,
    };
    half_report(
        EveMode::TwoRound,
        a,
        first,
        guess,
        &prime_product(primes),
        ctx,
    )
}

/// Eve overhears the full-duplex exchange. She has no self-interference to
/// cancel, so all `N` terms reach her; she rounds, factorizes and takes the
/// radical as her candidate secret. The comparison fields are taken
/// against receiver `reference`.
pub fn eve_attack_full(
    observations: &[FmacObservation],
    reference: usize,
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
) -> Result<EveReport, ProtocolError> {
    eve_attack_full_with(
        observations,
        reference,
        primes,
        ch,
        ctx,
        &FactorConfig::default(),
    )
}

pub fn eve_attack_full_with(
    observations: &[FmacObservation],
    reference: usize,
    primes: &[PrimeInput],
    ch: &ChannelState,
    ctx: &PrecisionContext,
    factor: &FactorConfig,
) -> Result<EveReport, ProtocolError> {
    let obs = observations
        .iter()
        .find(|o| o.receiver == reference)
        .ok_or_else(|| {
            ProtocolError::InvalidUsers(format!("no observation for user {reference}"))
        })?;
    let signals = primes
        .iter()
        .map(|p| pre_process_full(p, &ch.h_star, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    let y = eve_observe_clean(&signals, None, ch, ctx);
    let psi_eve = exp(&y, ctx)?;

    let mut ratios = Vec::with_capacity(primes.len());
    let mut v_ratios = Vec::new();
    let mut deviations = Vec::with_capacity(primes.len());
    let mut factors = Vec::new();
    let mut product_term = BigUint::from(1u32);
    for (i, p) in primes.iter().enumerate() {
        let r = ctx.div(&ch.h_eve[i], &ch.h_star)?;
        let c = if i == reference {
            0
        } else {
            ch.integer_ratio(i, reference)
                .or_else(|| ch.coefficient(i, reference))
                .ok_or(ProtocolError::NotIntegerChannel)?
        };
        deviations.push(ctx.sub(&r, &BigReal::from(c)));
        if c > 0 {
            v_ratios.push(ctx.div(&r, &BigReal::from(c))?);
            factors.push(distortion(p, c, &r, ctx)?);
            product_term *= BigUint::from(p.value()).pow(c);
        }
        ratios.push(r);
    }

    let eve_secret = eve_round(&psi_eve, ctx).and_then(|m| {
        if m <= BigUint::from(1u32) {
            return None;
        }
        factorize_with(&m, factor).ok().map(|f| radical(&f))
    });
    let secret = prime_product(primes);
    let psi_legit = obs.post_value.clone();
    Ok(EveReport {
        mode: EveMode::FullDuplex,
        abs_discrepancy: psi_legit.as_ref().map(|l| ctx.sub(l, &psi_eve).abs()),
        digit_overlap: psi_legit
            .as_ref()
            .map_or(0, |l| leading_digit_overlap(l, &psi_eve)),
        key_equal: eve_secret.as_ref() == Some(&secret),
        error_factor: error_factor(primes, &deviations, ctx)?,
        psi_eve,
        psi_legit,
        ratios,
        v_ratios,
        product_term,
        factors,
        eve_secret,
    })
}

/// Aggregate digit-level view over many Eve reports.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DigitSecuritySummary {
    pub reports: usize,
    pub eve_key_equal: usize,
    pub overlap_histogram: BTreeMap<u64, usize>,
    pub factor_overlap_histogram: BTreeMap<u64, usize>,
    /// Factors whose ratio exceeds the bound (or falls below its inverse).
    pub bound_factors_checked: usize,
    /// Of those, factors sharing more than `prime_digits - 2` leading digits.
    pub bound_violations: usize,
    pub position_checked: usize,
    /// Factors sharing fewer than `position - 1` leading digits.
    pub position_lower_violations: usize,
    /// Factors sharing at most `position + 1` leading digits.
    pub position_within_upper: usize,
}

impl DigitSecuritySummary {
    /// No key recovered and every checked factor lost its trailing digits.
    pub fn trailing_digits_lost(&self) -> bool {
        self.eve_key_equal == 0 && self.bound_violations == 0
    }
}

pub fn digit_security_report(
    reports: &[EveReport],
    prime_digits: u32,
    r_bound: &BigReal,
) -> DigitSecuritySummary {
    let mut out = DigitSecuritySummary {
        reports: reports.len(),
        ..Default::default()
    };
    let max_overlap = u64::from(prime_digits.saturating_sub(2));
    let one = BigReal::one();
    for report in reports {
        out.eve_key_equal += usize::from(report.key_equal);
        *out.overlap_histogram
            .entry(report.digit_overlap)
            .or_default() += 1;
        for f in &report.factors {
            *out.factor_overlap_histogram.entry(f.overlap).or_default() += 1;
            let legit = BigReal::from(f.legit_exponent);
            let beyond = if f.ratio >= legit {
                &f.ratio - &legit > r_bound - &one
            } else {
                // Mirror bound below the legitimate exponent.
                &legit - &f.ratio > r_bound - &one
            };
            if beyond && f.legit_exponent == 1 {
                out.bound_factors_checked += 1;
                out.bound_violations += usize::from(f.overlap > max_overlap);
            }
            if let Some(pos) = f.scale_position {
                out.position_checked += 1;
                out.position_lower_violations += usize::from(f.overlap + 1 < pos);
                out.position_within_upper += usize::from(f.overlap <= pos + 1);
            }
        }
    }
    out
}
