use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wmac_keygen::harness::{
    run_experiment, sweep, ExperimentConfig, HarnessError, Overrides, SweepAxis,
};
use wmac_keygen::protocol::ProtocolKind;

#[derive(Parser)]
#[command(
    version,
    about = "Seeded group secret-key experiments over simulated multiple-access channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run one experiment per value of a numeric field.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Field to vary (n_users, prime_digits, precision_digits,
        /// csi_epsilon, noise_variance, h_star, c_max, scale).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Hmac,
    Fmac,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
    /// Number of users.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Enable the eavesdropper.
    #[arg(long)]
    eve: bool,
    /// Decimal precision digits.
    #[arg(long)]
    precision: Option<u32>,
    /// Also write per-trial transcripts.
    #[arg(long)]
    transcripts: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            protocol: self.protocol.map(|p| match p {
                Protocol::Hmac => ProtocolKind::Hmac,
                Protocol::Fmac => ProtocolKind::Fmac,
            }),
            n_users: self.n,
            seed: Some(self.seed),
            trials: Some(self.trials),
            out: Some(self.out.clone()),
            eve: self.eve,
            precision_digits: self.precision,
        });
        if self.transcripts {
            cfg.output.transcripts = true;
        }
        Ok(cfg)
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => args.config().and_then(|cfg| {
            let s = run_experiment(&cfg)?;
            println!(
                "trials={} agreement_rate={:.4} secret_correct_rate={:.4} eve_success_rate={} out={}",
                s.trials,
                s.agreement_rate,
                s.secret_correct_rate,
                fmt_rate(s.eve_success_rate),
                args.out.display()
            );
            Ok(())
        }),
        Command::Sweep { run, axis, values } => run.config().and_then(|cfg| {
            let axis: SweepAxis = axis.parse()?;
            for row in sweep(&cfg, axis, &values)? {
                println!(
                    "{}={} agreement_rate={:.4} secret_correct_rate={:.4} eve_success_rate={}",
                    row.axis,
                    row.value,
                    row.agreement_rate,
                    row.secret_correct_rate,
                    fmt_rate(row.eve_success_rate)
                );
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
