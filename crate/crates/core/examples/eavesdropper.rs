//! What a passive eavesdropper recovers from one half-duplex round and from
//! the full-duplex exchange.
//!
//! ```text
//! cargo run --example eavesdropper
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmac_keygen::adversary::{digit_security_report, eve_attack_full, eve_attack_half, EveReport};
use wmac_keygen::channel::{draw_channel, estimate_csi, CsiModel, FadingModel};
use wmac_keygen::numerics::{BigReal, PrecisionContext};
use wmac_keygen::protocol::{run_full_round, run_round, sample_distinct_primes};

fn show(label: &str, r: &EveReport) {
    println!("{label}:");
    println!(
        "  psi_legit   {:?}",
        r.psi_legit
            .as_ref()
            .map(|v| v.round_to_digits(20).to_string())
    );
    println!("  psi_eve     {}", r.psi_eve.round_to_digits(20));
    println!("  error E_r   {}", r.error_factor.round_to_digits(12));
    println!("  overlap     {} leading digits", r.digit_overlap);
    for f in &r.factors {
        println!(
            "  p={} ratio={:.6} shares {} digits with p^{}",
            f.prime,
            f.ratio.to_f64(),
            f.overlap,
            f.legit_exponent
        );
    }
    println!("  key equal   {}", r.key_equal);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ctx = PrecisionContext::new(128)?;
    let zero = BigReal::zero();

    let primes = sample_distinct_primes(4, 6, &mut rng)?.primes;
    let ch = draw_channel(
        4,
        FadingModel::Rayleigh { scale: 1.0 },
        &BigReal::one(),
        &zero,
        &mut rng,
    )?;
    let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng)?;
    let round = run_round(0, &primes, &ch, &csi, &ctx, &mut rng)?;
    let half = eve_attack_half(&round, &primes, &ch, &ctx)?;
    show("half-duplex, round 0", &half);

    let primes = sample_distinct_primes(4, 5, &mut rng)?.primes;
    let h_star: BigReal = "0.5".parse()?;
    let ch = draw_channel(
        4,
        FadingModel::Integer { c_max: 3 },
        &h_star,
        &zero,
        &mut rng,
    )?;
    let obs = run_full_round(&primes, &ch, &ctx, &mut rng)?;
    let full = eve_attack_full(&obs, 0, &primes, &ch, &ctx)?;
    show("full-duplex, reference user 0", &full);

    let summary = digit_security_report(&[half, full], 6, &"1.0001".parse()?);
    println!("summary: {summary:?}");
    Ok(())
}
