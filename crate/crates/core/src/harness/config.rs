use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::EveMode;
use crate::channel::{CsiModel, FadingModel};
use crate::numerics::{BigReal, MAX_PRIME_DIGITS, MIN_DIGITS};
use crate::protocol::ProtocolKind;

pub const MAX_USERS: usize = 64;
pub const MAX_PRECISION_DIGITS: u32 = 4096;
pub const MAX_C: u32 = 64;
pub const MAX_TRIALS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EveConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Defaults to `single_round` for hmac and `full_duplex` for fmac.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<EveMode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write `transcripts/trial_<k>.json`.
    #[serde(default)]
    pub transcripts: bool,
}

/// One experiment: a protocol, a channel family and a trial budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n_users: usize,
    pub prime_digits: u32,
    pub precision_digits: u32,
    pub fading: FadingModel,
    #[serde(default = "BigReal::one")]
    pub h_star: BigReal,
    #[serde(default)]
    pub csi_epsilon: f64,
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default)]
    pub eve: EveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a configuration, by field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl ConfigError {
    pub fn single(field: &str, message: impl Into<String>) -> Self {
        Self {
            errors: vec![FieldError {
                field: field.to_string(),
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// CLI-level overrides applied on top of a file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub protocol: Option<ProtocolKind>,
    pub n_users: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub eve: bool,
    pub precision_digits: Option<u32>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::single("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::single("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.protocol {
            self.protocol = p;
        }
        if let Some(n) = o.n_users {
            self.n_users = n;
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.trials {
            self.trials = Some(t);
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
        if o.eve {
            self.eve.enabled = true;
        }
        if let Some(d) = o.precision_digits {
            self.precision_digits = d;
        }
    }

    pub fn csi_model(&self) -> CsiModel {
        if self.csi_epsilon == 0.0 {
            CsiModel::Perfect
        } else {
            CsiModel::Relative {
                epsilon: self.csi_epsilon,
            }
        }
    }

    pub fn eve_mode(&self) -> Option<EveMode> {
        if !self.eve.enabled {
            return None;
        }
        Some(self.eve.mode.unwrap_or(match self.protocol {
            ProtocolKind::Hmac => EveMode::SingleRound,
            ProtocolKind::Fmac => EveMode::FullDuplex,
        }))
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Check every field; `require_run` also demands trials, seed and an
    /// output directory.
    pub fn validate(&self, require_run: bool) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut bad = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.to_string(),
                message,
            })
        };
        if !(2..=MAX_USERS).contains(&self.n_users) {
            bad(
                "n_users",
                format!("must lie in 2..={MAX_USERS}, got {}", self.n_users),
            );
        }
        if !(1..=MAX_PRIME_DIGITS).contains(&self.prime_digits) {
            bad(
                "prime_digits",
                format!(
                    "must lie in 1..={MAX_PRIME_DIGITS}, got {}",
                    self.prime_digits
                ),
            );
        } else {
            let available = match self.prime_digits {
                1 => 4,
                2 => 21,
                _ => usize::MAX,
            };
            if self.n_users > available {
                bad(
                    "prime_digits",
                    format!(
                        "only {available} primes have {} digits, need {} distinct",
                        self.prime_digits, self.n_users
                    ),
                );
            }
        }
        if !(MIN_DIGITS..=MAX_PRECISION_DIGITS).contains(&self.precision_digits) {
            bad(
                "precision_digits",
                format!(
                    "must lie in {MIN_DIGITS}..={MAX_PRECISION_DIGITS}, got {}",
                    self.precision_digits
                ),
            );
        }
        match self.fading {
            FadingModel::Rayleigh { scale } | FadingModel::Quantized { scale }
                if !(scale.is_finite() && scale > 0.0) =>
            {
                bad("fading.scale", format!("must be positive, got {scale}"));
            }
            FadingModel::Integer { c_max } if !(1..=MAX_C).contains(&c_max) => {
                bad(
                    "fading.c_max",
                    format!("must lie in 1..={MAX_C}, got {c_max}"),
                );
            }
            _ => {}
        }
        if !self.h_star.is_positive() {
            bad("h_star", format!("must be positive, got {}", self.h_star));
        }
        if !(self.csi_epsilon.is_finite() && (0.0..1.0).contains(&self.csi_epsilon)) {
            bad(
                "csi_epsilon",
                format!("must lie in [0, 1), got {}", self.csi_epsilon),
            );
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            bad(
                "noise_variance",
                format!("must be non-negative, got {}", self.noise_variance),
            );
        }
        if self.protocol == ProtocolKind::Fmac {
            match self.fading {
                FadingModel::Integer { .. } | FadingModel::Quantized { .. } => {}
                FadingModel::Ideal
                    if self.h_star.is_positive() && unit_is_multiple(&self.h_star) => {}
                FadingModel::Ideal => bad(
                    "h_star",
                    "fmac over ideal fading needs 1 / h_star to be an integer".into(),
                ),
                FadingModel::Rayleigh { .. } => bad(
                    "fading",
                    "fmac needs integer fading (or the quantized extension)".into(),
                ),
            }
            if self.csi_epsilon != 0.0 {
                bad(
                    "csi_epsilon",
                    "fmac pre-processing uses h_star, not CSI; must be 0".into(),
                );
            }
        }
        if let Some(mode) = self.eve.mode {
            let fits = match self.protocol {
                ProtocolKind::Hmac => mode != EveMode::FullDuplex,
                ProtocolKind::Fmac => mode == EveMode::FullDuplex,
            };
            if !fits {
                bad(
                    "eve.mode",
                    format!("{mode:?} does not apply to {}", self.protocol),
                );
            }
        }
        if require_run {
            match self.trials {
                None => bad("trials", "required".into()),
                Some(t) if !(1..=MAX_TRIALS).contains(&t) => {
                    bad("trials", format!("must lie in 1..={MAX_TRIALS}, got {t}"))
                }
                _ => {}
            }
            if self.seed.is_none() {
                bad("seed", "required".into());
            }
            if self.output.dir.is_none() {
                bad("output.dir", "required".into());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }
}

fn unit_is_multiple(h_star: &BigReal) -> bool {
    let c = (1.0 / h_star.to_f64()).round();
    (1.0..1e9).contains(&c) && &BigReal::from(c as u64) * h_star == BigReal::one()
}

/// Numeric fields a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    NUsers,
    PrimeDigits,
    PrecisionDigits,
    CsiEpsilon,
    NoiseVariance,
    HStar,
    CMax,
    Scale,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NUsers => "n_users",
            SweepAxis::PrimeDigits => "prime_digits",
            SweepAxis::PrecisionDigits => "precision_digits",
            SweepAxis::CsiEpsilon => "csi_epsilon",
            SweepAxis::NoiseVariance => "noise_variance",
            SweepAxis::HStar => "h_star",
            SweepAxis::CMax => "c_max",
            SweepAxis::Scale => "scale",
        }
    }

    const ALL: [SweepAxis; 8] = [
        SweepAxis::NUsers,
        SweepAxis::PrimeDigits,
        SweepAxis::PrecisionDigits,
        SweepAxis::CsiEpsilon,
        SweepAxis::NoiseVariance,
        SweepAxis::HStar,
        SweepAxis::CMax,
        SweepAxis::Scale,
    ];

    /// A copy of `cfg` with this field set to `value`.
    pub fn apply(
        &self,
        cfg: &ExperimentConfig,
        value: &str,
    ) -> Result<ExperimentConfig, ConfigError> {
        let field = self.name();
        let parse_err = || ConfigError::single(field, format!("cannot parse {value:?}"));
        let mut out = cfg.clone();
        match self {
            SweepAxis::NUsers => out.n_users = value.parse().map_err(|_| parse_err())?,
            SweepAxis::PrimeDigits => out.prime_digits = value.parse().map_err(|_| parse_err())?,
            SweepAxis::PrecisionDigits => {
                out.precision_digits = value.parse().map_err(|_| parse_err())?
            }
            SweepAxis::CsiEpsilon => out.csi_epsilon = value.parse().map_err(|_| parse_err())?,
            SweepAxis::NoiseVariance => {
                out.noise_variance = value.parse().map_err(|_| parse_err())?
            }
            SweepAxis::HStar => out.h_star = value.parse().map_err(|_| parse_err())?,
            SweepAxis::CMax => match &mut out.fading {
                FadingModel::Integer { c_max } => {
                    *c_max = value.parse().map_err(|_| parse_err())?
                }
                _ => return Err(ConfigError::single(field, "fading model has no c_max")),
            },
            SweepAxis::Scale => match &mut out.fading {
                FadingModel::Rayleigh { scale } | FadingModel::Quantized { scale } => {
                    *scale = value.parse().map_err(|_| parse_err())?
                }
                _ => return Err(ConfigError::single(field, "fading model has no scale")),
            },
        }
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|a| a.name()).collect();
                ConfigError::single(
                    "axis",
                    format!("unknown axis {s:?}; expected one of {}", names.join(", ")),
                )
            })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"protocol":"hmac","n_users":4,"prime_digits":6,"precision_digits":64,
                "fading":{"kind":"rayleigh","scale":1.0}}"#,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = base();
        cfg.seed = Some(9);
        cfg.eve.enabled = true;
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn field_level_diagnostics() {
        let mut cfg = base();
        cfg.n_users = 1;
        cfg.precision_digits = 8;
        cfg.csi_epsilon = 2.0;
        let err = cfg.validate(true).unwrap_err();
        let fields: Vec<_> = err.errors.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(
            fields,
            [
                "n_users",
                "precision_digits",
                "csi_epsilon",
                "trials",
                "seed",
                "output.dir"
            ]
        );
    }

    #[test]
    fn fmac_needs_integer_fading() {
        let mut cfg = base();
        cfg.protocol = ProtocolKind::Fmac;
        assert!(cfg.validate(false).is_err());
        cfg.fading = FadingModel::Integer { c_max: 4 };
        assert!(cfg.validate(false).is_ok());
        cfg.fading = FadingModel::Ideal;
        cfg.h_star = "0.5".parse().unwrap();
        assert!(cfg.validate(false).is_ok());
        cfg.h_star = "0.3".parse().unwrap();
        assert!(cfg.validate(false).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(
            r#"{"protocol":"hmac","n_users":4,"prime_digits":6,"precision_digits":64,
                "fading":{"kind":"ideal"},"typo":1}"#
        )
        .is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = base();
        cfg.apply(&Overrides {
            protocol: Some(ProtocolKind::Fmac),
            n_users: Some(8),
            seed: Some(1),
            trials: Some(3),
            out: Some("x".into()),
            eve: true,
            precision_digits: Some(128),
        });
        assert_eq!(cfg.n_users, 8);
        assert_eq!(cfg.eve_mode(), Some(EveMode::FullDuplex));
        assert_eq!(cfg.output.dir, Some(PathBuf::from("x")));
    }

    #[test]
    fn sweep_axes() {
        let cfg = base();
        let axis: SweepAxis = "precision_digits".parse().unwrap();
        assert_eq!(axis.apply(&cfg, "128").unwrap().precision_digits, 128);
        assert!("nope".parse::<SweepAxis>().is_err());
        assert!(SweepAxis::CMax.apply(&cfg, "3").is_err());
        assert_eq!(
            SweepAxis::Scale.apply(&cfg, "2").unwrap().fading,
            FadingModel::Rayleigh { scale: 2.0 }
        );
    }
}
