//! Seeded Monte-Carlo experiments over the protocols, with CSV metrics,
//! a JSON summary and optional per-trial transcripts.
//!
//! Trial `k` draws everything from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `k`, so trials are independent of each other and of the worker
//! pool's scheduling.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    ConfigError, EveConfig, ExperimentConfig, FieldError, OutputConfig, Overrides, SweepAxis,
    MAX_C, MAX_PRECISION_DIGITS, MAX_TRIALS, MAX_USERS,
};

use crate::adversary::{
    eve_attack_full, eve_attack_half, eve_attack_two_round, EveMode, EveReport,
};
use crate::channel::{draw_channel, estimate_csi, ChannelDump};
use crate::keyderive::group_agreement;
use crate::numerics::{prime_product, BigReal, PrecisionContext, PrimeInput};
use crate::protocol::{
    run_protocol_fmac, run_protocol_hmac, sample_distinct_primes, ProtocolError, ProtocolKind,
    ProtocolTranscript, RecoveryFailure,
};

/// Version of the `summary.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

/// `metrics.csv` header, in column order.
pub const METRICS_COLUMNS: [&str; 7] = [
    "trial",
    "rounds_used",
    "group_agreed",
    "failure_count",
    "eve_key_equal",
    "eve_digit_overlap",
    "max_distance_to_integer",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: ProtocolError,
    },
    #[error("writing {path}: {message}")]
    Encode { path: PathBuf, message: String },
}

impl HarnessError {
    /// 2 for configuration problems, 3 for anything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub trial: u64,
    pub rounds_used: usize,
    pub group_agreed: bool,
    pub failure_count: usize,
    pub eve_key_equal: Option<bool>,
    pub eve_digit_overlap: Option<u64>,
    pub max_distance_to_integer: Option<String>,
}

/// Everything a single trial produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub primes: Vec<PrimeInput>,
    pub prime_collisions: u32,
    pub channel: ChannelDump,
    pub transcript: ProtocolTranscript,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<EveReport>,
    /// The secret every user should hold.
    #[serde(with = "crate::serde_util::biguint_string")]
    pub expected_secret: BigUint,
}

impl TrialRecord {
    pub fn metrics(&self) -> MetricsRow {
        let agreement = group_agreement(&self.transcript.secrets());
        MetricsRow {
            trial: self.trial,
            rounds_used: self.transcript.rounds_used,
            group_agreed: agreement.agreed,
            failure_count: self.transcript.failure_count(),
            eve_key_equal: self.eve.as_ref().map(|e| e.key_equal),
            eve_digit_overlap: self.eve.as_ref().map(|e| e.digit_overlap),
            max_distance_to_integer: self
                .transcript
                .max_distance_to_integer()
                .map(|d| d.to_string()),
        }
    }

    /// All users agreed, on the right value.
    pub fn secret_correct(&self) -> bool {
        self.transcript
            .per_user_secret
            .iter()
            .all(|u| u.secret.as_ref() == Some(&self.expected_secret))
    }
}

/// Generator for trial `trial` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Run trial `trial` of `cfg` (validated by the caller).
pub fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<TrialRecord, ProtocolError> {
    let seed = cfg.seed();
    let mut rng = trial_rng(seed, trial);
    let ctx = PrecisionContext::new(cfg.precision_digits)?;
    let drawn = sample_distinct_primes(cfg.n_users, cfg.prime_digits, &mut rng)?;
    let primes = drawn.primes;
    let noise = BigReal::from_f64(cfg.noise_variance)?;
    let ch = draw_channel(cfg.n_users, cfg.fading, &cfg.h_star, &noise, &mut rng)?;
    let (transcript, eve) = match cfg.protocol {
        ProtocolKind::Hmac => {
            let csi = estimate_csi(&ch, cfg.csi_model(), &mut rng)?;
            let t = run_protocol_hmac(&primes, &ch, &csi, &ctx, &mut rng)?;
            let rounds: Vec<_> = t.hmac_rounds().take(2).collect();
            let eve = match cfg.eve_mode() {
                None => None,
                Some(EveMode::TwoRound) => Some(eve_attack_two_round(
                    rounds[0], rounds[1], &primes, &ch, &ctx,
                )?),
                Some(_) => Some(eve_attack_half(rounds[0], &primes, &ch, &ctx)?),
            };
            (t, eve)
        }
        ProtocolKind::Fmac => {
            let t = run_protocol_fmac(&primes, &ch, &ctx, &mut rng)?;
            let eve = match cfg.eve_mode() {
                None => None,
                Some(_) => {
                    let obs: Vec<_> = t.fmac_observations().cloned().collect();
                    Some(eve_attack_full(&obs, 0, &primes, &ch, &ctx)?)
                }
            };
            (t, eve)
        }
    };
    Ok(TrialRecord {
        trial,
        expected_secret: prime_product(&primes),
        primes,
        prime_collisions: drawn.collisions,
        channel: ch.dump(seed),
        transcript,
        eve,
    })
}

/// All trials of `cfg` in trial order, computed on the rayon pool.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    cfg.validate(false)?;
    let trials = cfg
        .trials
        .ok_or_else(|| ConfigError::single("trials", "required"))?;
    (0..trials as u64)
        .into_par_iter()
        .map(|k| run_trial(cfg, k).map_err(|source| HarnessError::Trial { trial: k, source }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub trials: usize,
    /// Share of trials in which every user recovered the same value.
    pub agreement_rate: f64,
    /// Share of trials in which every user recovered the product of all
    /// primes.
    pub secret_correct_rate: f64,
    pub mean_rounds_used: f64,
    pub user_failures: usize,
    pub failures_by_kind: BTreeMap<String, usize>,
    pub prime_collisions: u64,
    pub max_distance_to_integer: Option<String>,
    pub eve_mode: Option<EveMode>,
    /// Share of trials in which Eve reassembled the secret.
    pub eve_success_rate: Option<f64>,
    pub mean_digit_overlap: Option<f64>,
}

fn failure_kind(f: &RecoveryFailure) -> &'static str {
    match f {
        RecoveryFailure::NotNearInteger { .. } => "not_near_integer",
        RecoveryFailure::Overflow { .. } => "overflow",
        RecoveryFailure::FactorBoundExceeded { .. } => "factor_bound_exceeded",
        RecoveryFailure::DuplicatePrime { .. } => "duplicate_prime",
        RecoveryFailure::NonPositive { .. } => "non_positive",
        RecoveryFailure::Arithmetic { .. } => "arithmetic",
    }
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentSummary {
    let n = records.len().max(1) as f64;
    let rows: Vec<MetricsRow> = records.iter().map(TrialRecord::metrics).collect();
    let mut failures_by_kind = BTreeMap::new();
    for r in records {
        for u in &r.transcript.per_user_secret {
            if let Some(f) = &u.failure {
                *failures_by_kind
                    .entry(failure_kind(f).to_string())
                    .or_default() += 1;
            }
        }
    }
    let max_distance = records
        .iter()
        .filter_map(|r| r.transcript.max_distance_to_integer())
        .max()
        .map(|d| d.to_string());
    let eve: Vec<&EveReport> = records.iter().filter_map(|r| r.eve.as_ref()).collect();
    let eve_on = cfg.eve_mode().is_some();
    // Where the files went is not part of the result.
    let mut echoed = cfg.clone();
    echoed.output.dir = None;
    ExperimentSummary {
        schema_version: SCHEMA_VERSION,
        config: echoed,
        trials: records.len(),
        agreement_rate: rows.iter().filter(|r| r.group_agreed).count() as f64 / n,
        secret_correct_rate: records.iter().filter(|r| r.secret_correct()).count() as f64 / n,
        mean_rounds_used: rows.iter().map(|r| r.rounds_used as f64).sum::<f64>() / n,
        user_failures: rows.iter().map(|r| r.failure_count).sum(),
        failures_by_kind,
        prime_collisions: records.iter().map(|r| u64::from(r.prime_collisions)).sum(),
        max_distance_to_integer: max_distance,
        eve_mode: cfg.eve_mode(),
        eve_success_rate: eve_on.then(|| eve.iter().filter(|e| e.key_equal).count() as f64 / n),
        mean_digit_overlap: eve_on
            .then(|| eve.iter().map(|e| e.digit_overlap as f64).sum::<f64>() / n),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_metrics(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let encode = |e: csv::Error| HarnessError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(encode)?;
    for r in records {
        w.serialize(r.metrics()).map_err(encode)?;
    }
    w.flush().map_err(io_err(path))
}

/// Run every trial and write `metrics.csv`, `summary.json` and, when
/// enabled, `transcripts/trial_<k>.json` under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, HarnessError> {
    cfg.validate(true)?;
    let dir = cfg.output.dir.clone().expect("validated");
    let records = run_trials(cfg)?;
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_metrics(&dir.join("metrics.csv"), &records)?;
    let summary = summarize(cfg, &records);
    write_json(&dir.join("summary.json"), &summary)?;
    if cfg.output.transcripts {
        let tdir = dir.join("transcripts");
        fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
        for r in &records {
            write_json(&tdir.join(format!("trial_{}.json", r.trial)), r)?;
        }
    }
    Ok(summary)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub trials: usize,
    pub agreement_rate: f64,
    pub secret_correct_rate: f64,
    pub mean_rounds_used: f64,
    pub user_failures: usize,
    pub eve_success_rate: Option<f64>,
    pub mean_digit_overlap: Option<f64>,
}

/// Run `cfg` once per value of `axis`, each into `<out>/<axis>=<value>/`,
/// and write the collected rows to `<out>/sweep.csv`.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<SweepRow>, HarnessError> {
    if values.is_empty() {
        return Err(ConfigError::single("values", "need at least one value").into());
    }
    cfg.validate(true)?;
    let base = cfg.output.dir.clone().expect("validated");
    let variants = values
        .iter()
        .map(|v| {
            let mut c = axis.apply(cfg, v)?;
            c.output.dir = Some(base.join(format!("{axis}={v}")));
            c.validate(true)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (v, c) in values.iter().zip(&variants) {
        let s = run_experiment(c)?;
        rows.push(SweepRow {
            axis: axis.to_string(),
            value: v.clone(),
            trials: s.trials,
            agreement_rate: s.agreement_rate,
            secret_correct_rate: s.secret_correct_rate,
            mean_rounds_used: s.mean_rounds_used,
            user_failures: s.user_failures,
            eve_success_rate: s.eve_success_rate,
            mean_digit_overlap: s.mean_digit_overlap,
        });
    }
    let path = base.join("sweep.csv");
    let encode = |e: csv::Error| HarnessError::Encode {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(encode)?;
    for r in &rows {
        w.serialize(r).map_err(encode)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(rows)
}
