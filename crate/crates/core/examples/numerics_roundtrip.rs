//! Multiply two primes through the log domain and recover the product.
//!
//! ```text
//! cargo run --example numerics_roundtrip
//! ```

use num_bigint::BigUint;
use wmac_keygen::numerics::{
    exp, factorize, ln, radical, round_to_integer, BigReal, PrecisionContext,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = PrecisionContext::new(50)?;
    let (p, q) = (100_003u64, 100_019u64);

    let sum = ctx.add(&ln(&BigReal::from(p), &ctx)?, &ln(&BigReal::from(q), &ctx)?);
    let value = exp(&sum, &ctx)?;
    let rounded = round_to_integer(&value, &ctx.default_tolerance())?;
    println!("exp(ln {p} + ln {q}) = {value}");
    println!(
        "rounded            = {} (distance {})",
        rounded.value, rounded.distance
    );
    assert_eq!(rounded.value, BigUint::from(p) * q);

    let n = BigUint::from(p).pow(2) * BigUint::from(q).pow(3);
    let f = factorize(&n)?;
    println!("{n} = {:?}, radical {}", f.factors(), radical(&f));
    Ok(())
}
