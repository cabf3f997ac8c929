//! One simultaneous exchange under integer fading. Each user factorizes
//! what it hears and multiplies the radical by its own prime.
//!
//! ```text
//! cargo run --example full_duplex
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmac_keygen::channel::{draw_channel, FadingModel};
use wmac_keygen::keyderive::group_agreement;
use wmac_keygen::numerics::{BigReal, PrecisionContext};
use wmac_keygen::protocol::{run_protocol_fmac, sample_distinct_primes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ctx = PrecisionContext::new(256)?;
    let n = 6;

    let primes = sample_distinct_primes(n, 5, &mut rng)?.primes;
    let h_star: BigReal = "0.5".parse()?;
    let ch = draw_channel(
        n,
        FadingModel::Integer { c_max: 4 },
        &h_star,
        &BigReal::zero(),
        &mut rng,
    )?;
    let t = run_protocol_fmac(&primes, &ch, &ctx, &mut rng)?;

    println!(
        "primes: {:?}",
        primes.iter().map(|p| p.value()).collect::<Vec<_>>()
    );
    for obs in t.fmac_observations() {
        let column: Vec<u32> = (0..n)
            .map(|i| ch.coefficient(i, obs.receiver).unwrap_or(0))
            .collect();
        println!(
            "user {}: c column {:?}, factors {:?}",
            obs.receiver,
            column,
            obs.exponent_map.as_ref().map(|f| f.factors().to_vec())
        );
    }
    let agreement = group_agreement(&t.secrets());
    println!(
        "rounds used: {}, agreed: {}",
        t.rounds_used, agreement.agreed
    );
    Ok(())
}
