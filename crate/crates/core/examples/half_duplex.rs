//! N rounds over a Rayleigh channel; every user ends up with the product of
//! all primes.
//!
//! ```text
//! cargo run --example half_duplex
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmac_keygen::channel::{draw_channel, estimate_csi, CsiModel, FadingModel};
use wmac_keygen::keyderive::group_agreement;
use wmac_keygen::numerics::{prime_product, BigReal, PrecisionContext};
use wmac_keygen::protocol::{run_protocol_hmac, sample_distinct_primes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ctx = PrecisionContext::new(128)?;
    let n = 5;

    let primes = sample_distinct_primes(n, 6, &mut rng)?.primes;
    let ch = draw_channel(
        n,
        FadingModel::Rayleigh { scale: 1.0 },
        &BigReal::one(),
        &BigReal::zero(),
        &mut rng,
    )?;
    let csi = estimate_csi(&ch, CsiModel::Perfect, &mut rng)?;
    let t = run_protocol_hmac(&primes, &ch, &csi, &ctx, &mut rng)?;

    println!(
        "primes: {:?}",
        primes.iter().map(|p| p.value()).collect::<Vec<_>>()
    );
    for round in t.hmac_rounds() {
        println!(
            "round {}: recovered {:?}",
            round.receiver,
            round.recovered.as_ref().map(|v| v.to_string())
        );
    }
    let agreement = group_agreement(&t.secrets());
    println!("rounds used: {}", t.rounds_used);
    println!(
        "agreed: {} on {:?}",
        agreement.agreed,
        agreement.majority.map(|s| s.to_string())
    );
    assert_eq!(t.secrets()[0].as_ref(), Some(&prime_product(&primes)));
    Ok(())
}
