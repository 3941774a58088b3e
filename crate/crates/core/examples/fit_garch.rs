//! Simulate a GARCH-RE series and recover its parameters with the adaptive sampler.
//!
//! `cargo run --release --example fit_garch`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rational_garch::garch::GarchParams;
use rational_garch::mcmc::{run_chain, ChainConfig, Model};
use rational_garch::simulate::simulate_garch;

fn main() -> rational_garch::Result<()> {
    let truth = GarchParams::rational(1.3e-5, 0.148, 0.836, 1.57);
    let (returns, _) = simulate_garch(&truth, 3000, &mut ChaCha8Rng::seed_from_u64(7))?;
    let chain = run_chain(Model::GarchRe, &returns, &ChainConfig::default())?;

    print!("{}", chain.summary().table());
    println!("\ntruth:");
    for (name, v) in Model::GarchRe.param_names().iter().zip(Model::GarchRe.natural(&truth)) {
        println!("{name:<8}{v:>18.6}");
    }
    let vols = chain.posterior_mean_variances(&returns, 50)?;
    if let Some((date, v)) = vols.iter().last() {
        println!("\nposterior-mean variance on {date}: {v:.3e}");
    }
    Ok(())
}
