//! Run a small experiment and a precision sweep into a temporary directory.
//!
//! ```text
//! cargo run --release --example experiment_sweep [out_dir]
//! ```

use std::path::PathBuf;

use wmac_keygen::harness::{run_experiment, sweep, ExperimentConfig, SweepAxis};

const CONFIG: &str = r#"{
  "protocol": "fmac",
  "n_users": 8,
  "prime_digits": 3,
  "precision_digits": 64,
  "fading": { "kind": "integer", "c_max": 2 },
  "h_star": "0.5",
  "eve": { "enabled": true },
  "trials": 20,
  "seed": 11
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wmac-keygen-sweep"));
    let mut cfg = ExperimentConfig::from_json(CONFIG)?;
    cfg.output.dir = Some(out.join("single"));

    let s = run_experiment(&cfg)?;
    println!(
        "single run: agreement {:.3}, eve success {:?}, mean overlap {:?}",
        s.agreement_rate, s.eve_success_rate, s.mean_digit_overlap
    );

    cfg.output.dir = Some(out.join("precision"));
    let values = ["32", "48", "64", "128"].map(String::from);
    for row in sweep(&cfg, SweepAxis::PrecisionDigits, &values)? {
        println!(
            "precision_digits={} agreement {:.3}",
            row.value, row.agreement_rate
        );
    }
    println!("outputs under {}", out.display());
    Ok(())
}
