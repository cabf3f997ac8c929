//! Wireless multiple-access channel: reciprocal fading among users,
//! independent eavesdropper taps, superposition with optional AWGN, and
//! transmitter-side CSI estimates.

use rand::Rng;
use rand_distr::{Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{BigReal, PrecisionContext};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ChannelError {
    ChannelError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// How link gains are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    /// Every gain is 1.
    Ideal,
    /// Rayleigh-distributed magnitudes with the given scale parameter.
    Rayleigh { scale: f64 },
    /// `h[i][j] = c_ij * h_star` with `c_ij` uniform on `1..=c_max`.
    Integer { c_max: u32 },
    /// Rayleigh gains; `c_ij` is the nearest positive multiple of `h_star`,
    /// which the gains themselves do not honour. Used to measure how the
    /// full-duplex scheme degrades off its integer premise.
    Quantized { scale: f64 },
}

impl FadingModel {
    fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            FadingModel::Rayleigh { scale } | FadingModel::Quantized { scale }
                if !(scale.is_finite() && scale > 0.0) =>
            {
                Err(invalid("scale", format!("must be positive, got {scale}")))
            }
            FadingModel::Integer { c_max: 0 } => Err(invalid("c_max", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// One block-fading realization, static for a whole protocol execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub n_users: usize,
    pub model: FadingModel,
    /// Reciprocal gains; `h[i][i]` is zero and unused.
    pub h: Vec<Vec<BigReal>>,
    pub h_eve: Vec<BigReal>,
    pub h_star: BigReal,
    pub noise_variance: BigReal,
    /// Integer fading multipliers `c_ij` for the integer and quantized
    /// models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<u32>>>,
}

/// Reproducibility dump of a channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub n: usize,
    pub model: FadingModel,
    pub h_star: BigReal,
    pub h: Vec<Vec<BigReal>>,
    pub h_eve: Vec<BigReal>,
    pub noise_variance: BigReal,
    pub seed: u64,
}

fn rayleigh<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> BigReal {
    let dist = Weibull::new(scale * std::f64::consts::SQRT_2, 2.0).expect("positive scale");
    loop {
        let g: f64 = dist.sample(rng);
        if g > 0.0 {
            return BigReal::from_f64(g).expect("finite gain");
        }
    }
}

/// Draw a reciprocal channel for `n_users` plus eavesdropper taps.
///
/// Eve's taps come from the legitimate marginal for the ideal, Rayleigh and
/// quantized models. Under integer fading they are drawn continuously as
/// `h_star * U(0.5, c_max + 0.5)`: an exact integer multiple of `h_star` at
/// Eve is the measure-zero case, which callers can construct explicitly.
pub fn draw_channel<R: Rng + ?Sized>(
    n_users: usize,
    model: FadingModel,
    h_star: &BigReal,
    noise_variance: &BigReal,
    rng: &mut R,
) -> Result<ChannelState, ChannelError> {
    if n_users < 2 {
        return Err(invalid(
            "n_users",
            format!("need at least 2, got {n_users}"),
        ));
    }
    if !h_star.is_positive() {
        return Err(invalid("h_star", format!("must be positive, got {h_star}")));
    }
    if noise_variance.is_negative() {
        return Err(invalid("noise_variance", "must be non-negative"));
    }
    model.validate()?;

    let mut h = vec![vec![BigReal::zero(); n_users]; n_users];
    let mut coefficients = match model {
        FadingModel::Integer { .. } | FadingModel::Quantized { .. } => {
            Some(vec![vec![0u32; n_users]; n_users])
        }
        _ => None,
    };
    for i in 0..n_users {
        for j in i + 1..n_users {
            let (gain, c) = match model {
                FadingModel::Ideal => (BigReal::one(), None),
                FadingModel::Rayleigh { scale } => (rayleigh(scale, rng), None),
                FadingModel::Integer { c_max } => {
                    let c = rng.gen_range(1..=c_max);
                    (&BigReal::from(c) * h_star, Some(c))
                }
                FadingModel::Quantized { scale } => {
                    let g = rayleigh(scale, rng);
                    let ratio = g.to_f64() / h_star.to_f64();
                    let c = ratio.round().clamp(1.0, f64::from(u32::MAX)) as u32;
                    (g, Some(c))
                }
            };
            h[i][j] = gain.clone();
            h[j][i] = gain;
            if let (Some(cs), Some(c)) = (coefficients.as_mut(), c) {
                cs[i][j] = c;
                cs[j][i] = c;
            }
        }
    }
    let h_eve = (0..n_users)
        .map(|_| match model {
            FadingModel::Ideal => BigReal::one(),
            FadingModel::Rayleigh { scale } | FadingModel::Quantized { scale } => {
                rayleigh(scale, rng)
            }
            FadingModel::Integer { c_max } => {
                let u = rng.gen_range(0.5..f64::from(c_max) + 0.5);
                &BigReal::from_f64(u).expect("finite") * h_star
            }
        })
        .collect();
    Ok(ChannelState {
        n_users,
        model,
        h,
        h_eve,
        h_star: h_star.clone(),
        noise_variance: noise_variance.clone(),
        coefficients,
    })
}

impl ChannelState {
    pub fn gain(&self, from: usize, to: usize) -> &BigReal {
        &self.h[from][to]
    }

    /// `c_ij`, when the model defines one.
    pub fn coefficient(&self, from: usize, to: usize) -> Option<u32> {
        self.coefficients.as_ref().map(|c| c[from][to])
    }

    /// Replace Eve's taps, e.g. to construct a specific attack geometry.
    pub fn with_eve_taps(mut self, h_eve: Vec<BigReal>) -> Result<Self, ChannelError> {
        if h_eve.len() != self.n_users {
            return Err(invalid("h_eve", "need one tap per user"));
        }
        if h_eve.iter().any(|g| !g.is_positive()) {
            return Err(invalid("h_eve", "taps must be positive"));
        }
        self.h_eve = h_eve;
        Ok(self)
    }

    /// True when every off-diagonal `h[i][j] / h_star` is an exact positive
    /// integer.
    pub fn is_integer_fading(&self) -> bool {
        (0..self.n_users).all(|i| {
            (0..self.n_users)
                .filter(|&j| j != i)
                .all(|j| self.integer_ratio(i, j).is_some())
        })
    }

    /// `h[i][j] / h_star` when it is an exact positive integer.
    pub fn integer_ratio(&self, from: usize, to: usize) -> Option<u32> {
        let g = &self.h[from][to];
        // Exact test: g = c * h_star with c a positive integer.
        let guess = (g.to_f64() / self.h_star.to_f64()).round();
        if !(guess >= 1.0 && guess <= f64::from(u32::MAX)) {
            return None;
        }
        let c = guess as u32;
        (&BigReal::from(c) * &self.h_star == *g).then_some(c)
    }

    pub fn dump(&self, seed: u64) -> ChannelDump {
        ChannelDump {
            n: self.n_users,
            model: self.model,
            h_star: self.h_star.clone(),
            h: self.h.clone(),
            h_eve: self.h_eve.clone(),
            noise_variance: self.noise_variance.clone(),
            seed,
        }
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> BigReal {
        if !self.noise_variance.is_positive() {
            return BigReal::zero();
        }
        let sd = self.noise_variance.to_f64().sqrt();
        let w: f64 = Normal::new(0.0, sd).expect("finite variance").sample(rng);
        BigReal::from_f64(w).expect("finite noise")
    }
}

/// Observation at `receiver`: `sum_i h[i][receiver] * signals[i] + w`.
///
/// With `exclude_self` the receiver's own entry is skipped (half-duplex
/// listening, or ideal self-interference cancellation). The channel acts
/// exactly; the receiver front end rounds the result to `ctx` precision.
/// Noise is drawn only when the variance is positive.
pub fn superpose<R: Rng + ?Sized>(
    signals: &[BigReal],
    receiver: usize,
    exclude_self: bool,
    ch: &ChannelState,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> BigReal {
    assert_eq!(signals.len(), ch.n_users, "one signal per user");
    let mut y = BigReal::zero();
    for (i, x) in signals.iter().enumerate() {
        if i == receiver {
            if exclude_self {
                continue;
            }
            // A node hears itself at unit gain when nothing cancels it.
            y = &y + x;
            continue;
        }
        y = &y + &(&ch.h[i][receiver] * x);
    }
    y = &y + &ch.noise(rng);
    ctx.round(&y)
}

/// Eve's observation `sum_i h_eve[i] * signals[i] + w_E`. She has no
/// self-interference to cancel, so every transmitter reaches her; `silent`
/// marks a user that does not transmit this round.
pub fn eve_observe<R: Rng + ?Sized>(
    signals: &[BigReal],
    silent: Option<usize>,
    ch: &ChannelState,
    ctx: &PrecisionContext,
    rng: &mut R,
) -> BigReal {
    let clean = eve_observe_clean(signals, silent, ch, ctx);
    ctx.round(&(&clean + &ch.noise(rng)))
}

/// Noiseless form of [`eve_observe`].
pub fn eve_observe_clean(
    signals: &[BigReal],
    silent: Option<usize>,
    ch: &ChannelState,
    ctx: &PrecisionContext,
) -> BigReal {
    assert_eq!(signals.len(), ch.n_users, "one signal per user");
    let mut y = BigReal::zero();
    for (i, x) in signals.iter().enumerate() {
        if Some(i) == silent {
            continue;
        }
        y = &y + &(&ch.h_eve[i] * x);
    }
    ctx.round(&y)
}

/// How transmitters' gain estimates deviate from the true channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsiModel {
    Perfect,
    /// `h_hat = h * (1 + u)` with `u` uniform on `[-epsilon, epsilon]`.
    Relative {
        epsilon: f64,
    },
}

/// Gain estimates held by the transmitters: `h_hat[i][j]` is user `i`'s
/// estimate of its link toward `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiEstimate {
    pub h_hat: Vec<Vec<BigReal>>,
    pub model: CsiModel,
}

impl CsiEstimate {
    pub fn gain(&self, from: usize, to: usize) -> &BigReal {
        &self.h_hat[from][to]
    }
}

/// Estimate every directed link once for the whole execution.
pub fn estimate_csi<R: Rng + ?Sized>(
    ch: &ChannelState,
    model: CsiModel,
    rng: &mut R,
) -> Result<CsiEstimate, ChannelError> {
    let epsilon = match model {
        CsiModel::Perfect => {
            return Ok(CsiEstimate {
                h_hat: ch.h.clone(),
                model,
            })
        }
        CsiModel::Relative { epsilon } => epsilon,
    };
    if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
        return Err(invalid(
            "epsilon",
            format!("must lie in [0, 1), got {epsilon}"),
        ));
    }
    let bound = BigReal::from_f64(epsilon).expect("finite");
    let mut h_hat = ch.h.clone();
    for (i, row) in h_hat.iter_mut().enumerate() {
        for (j, g) in row.iter_mut().enumerate() {
            if i == j || epsilon == 0.0 {
                continue;
            }
            let u = rng.gen_range(-epsilon..=epsilon);
            let mut u = BigReal::from_f64(u).expect("finite");
            if u.abs() > bound {
                u = if u.is_negative() {
                    bound.neg()
                } else {
                    bound.clone()
                };
            }
            *g = &*g * &(&BigReal::one() + &u);
        }
    }
    Ok(CsiEstimate { h_hat, model })
}

/// Largest relative deviation `|h_hat - h| / h` over all links.
pub fn max_relative_error(ch: &ChannelState, csi: &CsiEstimate) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..ch.n_users {
        for j in 0..ch.n_users {
            if i == j {
                continue;
            }
            let d = (&csi.h_hat[i][j] - &ch.h[i][j]).abs();
            let rel = d.to_f64() / ch.h[i][j].to_f64();
            worst = worst.max(rel);
        }
    }
    worst
}
