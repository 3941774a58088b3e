//! Fit both error laws to the same heavy-tailed data and compare AIC and DIC.
//!
//! `cargo run --release --example model_selection`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rational_garch::garch::GarchParams;
use rational_garch::mcmc::{run_chain, ChainConfig, Model};
use rational_garch::selection::{compare, AicForm, FitScore};
use rational_garch::simulate::simulate_garch;

fn main() -> rational_garch::Result<()> {
    let truth = GarchParams::rational(2.8e-5, 0.132, 0.858, 1.57);
    let (returns, _) = simulate_garch(&truth, 2000, &mut ChaCha8Rng::seed_from_u64(3))?;
    let config = ChainConfig::default();
    let score = |m| -> rational_garch::Result<FitScore> {
        Ok(FitScore::from_chain(&run_chain(m, &returns, &config)?, AicForm::Standard))
    };
    let comparison = compare(score(Model::GarchRe)?, score(Model::GarchN)?);
    print!("{}", comparison.table());
    Ok(())
}
