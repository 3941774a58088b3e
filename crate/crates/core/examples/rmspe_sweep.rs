//! Score two fitted models against HL-adjusted realized variance across sampling periods.
//!
//! `cargo run --release --example rmspe_sweep`

use std::time::Duration;

use rational_garch::commands::rmspe_sweep;
use rational_garch::data::{daily_log_returns, SessionCalendar};
use rational_garch::garch::GarchParams;
use rational_garch::mcmc::{run_chain, ChainConfig, Model};
use rational_garch::realized::RmspeForm;
use rational_garch::simulate::{simulate_garch_market, DiffusionSpec};

fn main() -> rational_garch::Result<()> {
    let calendar = SessionCalendar::tokyo();
    let template = DiffusionSpec::constant(calendar.clone(), 3240, 0.0)
        .with_noise(1e-7)
        .with_overnight_fraction(0.3);
    let params = GarchParams::rational(1.3e-5, 0.148, 0.836, 1.57);
    let market = simulate_garch_market(&params, 1000, &template, 300)?;
    let daily = daily_log_returns(&market.daily)?;

    let config = ChainConfig::default();
    let mut vols = Vec::new();
    for model in [Model::GarchRe, Model::GarchN] {
        let chain = run_chain(model, &daily, &config)?;
        vols.push((model.label().to_string(), chain.posterior_mean_variances(&daily, 50)?));
    }
    let deltas: Vec<Duration> = [5, 15, 30, 60, 120, 300, 600, 1800, 3600]
        .into_iter()
        .map(Duration::from_secs)
        .collect();
    let table = rmspe_sweep(&market.ticks, &calendar, &daily, &vols, &deltas, RmspeForm::Mean)?;

    println!("{:>8}{:>8}{:>12}{:>12}", "delta_s", "c", table.models[0], table.models[1]);
    for (d, c, errors) in &table.rows {
        println!("{d:>8}{c:>8.3}{:>12.4}{:>12.4}", errors[0], errors[1]);
    }
    for (j, m) in table.models.iter().enumerate() {
        if let Some((d, e)) = table.best(j) {
            println!("{m}: minimum {e:.4} at {d} s");
        }
    }
    Ok(())
}
