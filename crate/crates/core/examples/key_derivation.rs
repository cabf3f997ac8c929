//! Turn agreed secrets into symmetric keys.
//!
//! ```text
//! cargo run --example key_derivation
//! ```

use num_bigint::BigUint;
use wmac_keygen::keyderive::{derive_key, group_agreement, DEFAULT_KEY_BITS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = BigUint::from(100_003u64) * 100_019u64 * 100_043u64;
    let k = derive_key(&s, DEFAULT_KEY_BITS, b"session 1")?;
    println!("S = {s}");
    println!("session 1: {}", k.to_hex());
    println!(
        "session 2: {}",
        derive_key(&s, DEFAULT_KEY_BITS, b"session 2")?.to_hex()
    );
    println!("128-bit:   {}", derive_key(&s, 128, b"session 1")?.to_hex());

    let one_failed = group_agreement(&[Some(s.clone()), Some(s.clone()), None]);
    println!(
        "agreement with one failed user: agreed={} fraction={:.3}",
        one_failed.agreed, one_failed.agreeing_fraction
    );
    Ok(())
}
