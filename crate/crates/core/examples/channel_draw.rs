//! Draw one channel of each fading model and print the gains.
//!
//! ```text
//! cargo run --example channel_draw
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmac_keygen::channel::{draw_channel, estimate_csi, max_relative_error, CsiModel, FadingModel};
use wmac_keygen::numerics::BigReal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h_star: BigReal = "0.25".parse()?;
    let models = [
        FadingModel::Ideal,
        FadingModel::Rayleigh { scale: 1.0 },
        FadingModel::Integer { c_max: 4 },
        FadingModel::Quantized { scale: 1.0 },
    ];
    for model in models {
        let ch = draw_channel(3, model, &h_star, &BigReal::zero(), &mut rng)?;
        println!("{model:?}");
        for i in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|j| format!("{:.6}", ch.gain(i, j).to_f64()))
                .collect();
            println!(
                "  h[{i}] = [{}]  eve {:.6}",
                row.join(", "),
                ch.h_eve[i].to_f64()
            );
        }
        if let Some(c) = &ch.coefficients {
            println!("  c = {c:?}, integer fading: {}", ch.is_integer_fading());
        }
    }

    let ch = draw_channel(
        4,
        FadingModel::Rayleigh { scale: 1.0 },
        &h_star,
        &BigReal::zero(),
        &mut rng,
    )?;
    let csi = estimate_csi(&ch, CsiModel::Relative { epsilon: 0.01 }, &mut rng)?;
    println!(
        "csi epsilon 0.01: worst relative error {:.5}",
        max_relative_error(&ch, &csi)
    );
    Ok(())
}
