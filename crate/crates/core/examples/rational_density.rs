//! Shape of the rational error law: modes, tails and inverse-CDF sampling.
//!
//! `cargo run --example rational_density`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rational_garch::rational::{self, RationalDensity};

fn main() -> rational_garch::Result<()> {
    println!("{:>6}{:>10}{:>14}{:>14}{:>14}  modes", "a", "pdf(0)", "P(X>3)", "variance", "sample var");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for a in [0.5, 1.0, 1.57, 2.0, 3.0] {
        let d = RationalDensity::new(a)?;
        let xs = rational::sample(200_000, a, &mut rng)?;
        let sample_var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let modes: Vec<String> = d.modes().iter().map(|m| format!("{m:+.3}")).collect();
        println!(
            "{a:>6}{:>10.4}{:>14.3e}{:>14.6}{:>14.4}  {}",
            d.pdf(0.0),
            1.0 - d.cdf(3.0)?,
            d.variance()?,
            sample_var,
            modes.join(" ")
        );
    }
    println!("\nThe law has unit variance but no fourth moment, so sample variances converge slowly.");
    Ok(())
}
