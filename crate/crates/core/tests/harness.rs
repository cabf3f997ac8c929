use std::fs;
use std::path::Path;

use proptest::prelude::*;
use wmac_keygen::adversary::EveMode;
use wmac_keygen::channel::FadingModel;
use wmac_keygen::harness::{
    run_experiment, run_trial, sweep, write_metrics, EveConfig, ExperimentConfig, OutputConfig,
    SweepAxis, METRICS_COLUMNS, SCHEMA_VERSION,
};
use wmac_keygen::numerics::BigReal;
use wmac_keygen::protocol::ProtocolKind;

fn base(protocol: ProtocolKind, fading: FadingModel, dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        protocol,
        n_users: 4,
        prime_digits: 5,
        precision_digits: 128,
        fading,
        h_star: BigReal::one(),
        csi_epsilon: 0.0,
        noise_variance: 0.0,
        eve: EveConfig::default(),
        trials: Some(100),
        seed: Some(2024),
        output: OutputConfig {
            dir: Some(dir.to_path_buf()),
            transcripts: false,
        },
    }
}

fn column(dir: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(dir.join("metrics.csv")).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records()
        .map(|row| row.unwrap()[idx].to_string())
        .collect()
}

#[test]
fn hmac_ideal_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&base(ProtocolKind::Hmac, FadingModel::Ideal, dir.path())).unwrap();
    assert_eq!(s.schema_version, SCHEMA_VERSION);
    assert_eq!(s.agreement_rate, 1.0);
    assert!(column(dir.path(), "rounds_used").iter().all(|v| v == "4"));
    assert_eq!(column(dir.path(), "trial").len(), 100);
}

#[test]
fn fmac_integer_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        ProtocolKind::Fmac,
        FadingModel::Integer { c_max: 4 },
        dir.path(),
    );
    cfg.eve.enabled = true;
    let s = run_experiment(&cfg).unwrap();
    assert_eq!(s.agreement_rate, 1.0);
    assert_eq!(s.secret_correct_rate, 1.0);
    assert_eq!(s.eve_mode, Some(EveMode::FullDuplex));
    assert_eq!(s.eve_success_rate, Some(0.0));
    assert!(column(dir.path(), "rounds_used").iter().all(|v| v == "1"));
    assert!(column(dir.path(), "eve_key_equal")
        .iter()
        .all(|v| v == "false"));
}

#[test]
fn outputs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for protocol in [ProtocolKind::Hmac, ProtocolKind::Fmac] {
        let fading = match protocol {
            ProtocolKind::Hmac => FadingModel::Rayleigh { scale: 1.0 },
            ProtocolKind::Fmac => FadingModel::Integer { c_max: 3 },
        };
        let mut cfg = base(protocol, fading, a.path());
        cfg.eve.enabled = true;
        cfg.output.transcripts = true;
        cfg.trials = Some(30);
        run_experiment(&cfg).unwrap();
        cfg.output.dir = Some(b.path().to_path_buf());
        run_experiment(&cfg).unwrap();
        for f in ["metrics.csv", "summary.json", "transcripts/trial_7.json"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{protocol} {f}"
            );
        }
    }
}

#[test]
fn trials_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        ProtocolKind::Hmac,
        FadingModel::Rayleigh { scale: 1.0 },
        dir.path(),
    );
    cfg.csi_epsilon = 0.001;
    cfg.eve.enabled = true;
    cfg.trials = Some(12);
    run_experiment(&cfg).unwrap();
    let full = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let full: Vec<&str> = full.lines().collect();

    // Any subset of trials, run alone, reproduces its own rows.
    let picked = [3u64, 0, 11, 7];
    let records: Vec<_> = picked
        .iter()
        .map(|&k| run_trial(&cfg, k).unwrap())
        .collect();
    let path = dir.path().join("subset.csv");
    write_metrics(&path, &records).unwrap();
    let subset = fs::read_to_string(&path).unwrap();
    for (line, &k) in subset.lines().skip(1).zip(&picked) {
        assert_eq!(line, full[k as usize + 1]);
    }

    // A shorter run is a prefix of a longer one.
    cfg.trials = Some(5);
    let short = tempfile::tempdir().unwrap();
    cfg.output.dir = Some(short.path().to_path_buf());
    run_experiment(&cfg).unwrap();
    let head = fs::read_to_string(short.path().join("metrics.csv")).unwrap();
    assert_eq!(head.lines().collect::<Vec<_>>(), full[..6]);
}

#[test]
fn precision_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        ProtocolKind::Fmac,
        FadingModel::Integer { c_max: 2 },
        dir.path(),
    );
    cfg.n_users = 8;
    cfg.prime_digits = 3;
    cfg.trials = Some(30);
    let values = ["32", "64", "128"].map(String::from);
    let rows = sweep(&cfg, SweepAxis::PrecisionDigits, &values).unwrap();
    assert!(
        rows.windows(2)
            .all(|w| w[0].agreement_rate <= w[1].agreement_rate),
        "{rows:?}"
    );
    assert_eq!(rows[2].agreement_rate, 1.0);
    assert!(dir.path().join("precision_digits=64/summary.json").exists());
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn user_count_sweep_sets_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        ProtocolKind::Hmac,
        FadingModel::Rayleigh { scale: 1.0 },
        dir.path(),
    );
    cfg.trials = Some(10);
    let values = ["2", "4", "8"].map(String::from);
    let rows = sweep(&cfg, SweepAxis::NUsers, &values).unwrap();
    for (row, n) in rows.iter().zip([2.0, 4.0, 8.0]) {
        assert_eq!(row.mean_rounds_used, n);
        assert_eq!(row.agreement_rate, 1.0);
    }
}

#[test]
fn csi_error_sweep_does_not_improve() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        ProtocolKind::Hmac,
        FadingModel::Rayleigh { scale: 1.0 },
        dir.path(),
    );
    cfg.prime_digits = 6;
    cfg.trials = Some(40);
    let values = ["0", "0.001", "0.01"].map(String::from);
    let rows = sweep(&cfg, SweepAxis::CsiEpsilon, &values).unwrap();
    assert!(
        rows.windows(2)
            .all(|w| w[0].agreement_rate >= w[1].agreement_rate),
        "{rows:?}"
    );
    assert_eq!(rows[0].agreement_rate, 1.0);
}

#[test]
fn bad_fields_reported_together() {
    let text = r#"{"protocol":"fmac","n_users":1,"prime_digits":5,"precision_digits":8,
                  "fading":{"kind":"rayleigh","scale":1.0},"csi_epsilon":0.5}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let err = cfg.validate(true).unwrap_err();
    let fields: Vec<&str> = err.errors.iter().map(|e| e.field.as_str()).collect();
    for f in [
        "n_users",
        "precision_digits",
        "fading",
        "csi_epsilon",
        "trials",
        "seed",
        "output.dir",
    ] {
        assert!(fields.contains(&f), "{f} missing from {fields:?}");
    }
    assert!(ExperimentConfig::from_json(r#"{"protocol":"hmac","bogus":1}"#).is_err());
}

#[test]
fn metrics_header_is_documented_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(ProtocolKind::Hmac, FadingModel::Ideal, dir.path());
    cfg.trials = Some(1);
    run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_COLUMNS.join(","));
}

fn fading() -> impl Strategy<Value = FadingModel> {
    prop_oneof![
        Just(FadingModel::Ideal),
        (0.1f64..4.0).prop_map(|scale| FadingModel::Rayleigh { scale }),
        (1u32..=8).prop_map(|c_max| FadingModel::Integer { c_max }),
        (0.1f64..4.0).prop_map(|scale| FadingModel::Quantized { scale }),
    ]
}

proptest! {
    #[test]
    fn config_round_trips(
        fmac: bool,
        n in 2usize..64,
        digits in 1u32..9,
        precision in 16u32..512,
        fading in fading(),
        eps in 0.0f64..0.5,
        eve: bool,
        trials in prop::option::of(1usize..1000),
        seed: Option<u64>,
    ) {
        let cfg = ExperimentConfig {
            protocol: if fmac { ProtocolKind::Fmac } else { ProtocolKind::Hmac },
            n_users: n,
            prime_digits: digits,
            precision_digits: precision,
            fading,
            h_star: "0.25".parse().unwrap(),
            csi_epsilon: eps,
            noise_variance: 0.0,
            eve: EveConfig { enabled: eve, mode: None },
            trials,
            seed,
            output: OutputConfig::default(),
        };
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
