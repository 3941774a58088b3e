use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rational_garch::commands::{
    cmd_compare, cmd_fit, cmd_rmspe, cmd_rv, cmd_simulate, CompareConfig, CompareSource, FitConfig,
    RmspeConfig, RvConfig, SimulateConfig,
};
use rational_garch::garch::GarchParams;
use rational_garch::mcmc::{ChainConfig, Model};
use rational_garch::realized::RmspeForm;
use rational_garch::selection::AicForm;

#[derive(Parser)]
#[command(name = "rgarch", version, about = "GARCH(1,1) with normal or rational errors, fitted by adaptive MCMC and scored against realized volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model to daily closes
    Fit(FitArgs),
    /// Compare two fits by AIC and DIC
    Compare(CompareArgs),
    /// Realized variance, signature curve and HL factor from ticks
    Rv(RvArgs),
    /// RMSPE of model variances against adjusted realized variance
    Rmspe(RmspeArgs),
    /// Simulate a GARCH-driven intraday market
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 6000)]
    burn_in: usize,
    #[arg(long, default_value_t = 50_000)]
    samples: usize,
    #[arg(long, default_value_t = 500)]
    adapt_interval: usize,
    /// Degrees of freedom of the Student-t proposal
    #[arg(long, default_value_t = 10.0)]
    nu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ChainArgs {
    fn config(&self) -> ChainConfig {
        ChainConfig {
            burn_in: self.burn_in,
            samples: self.samples,
            adapt_interval: self.adapt_interval,
            nu: self.nu,
            seed: self.seed,
            ..ChainConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    model: Model,
    /// Daily CSV with `date,close`
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    chain: ChainArgs,
    /// Use every n-th sample for the posterior-mean variance path
    #[arg(long, default_value_t = 50)]
    thin: usize,
    #[arg(long)]
    paper_literal_aic: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two summary JSON files written by `fit`
    #[arg(long, num_args = 2, conflicts_with = "data")]
    summaries: Option<Vec<PathBuf>>,
    /// Fit both models on this daily CSV instead
    #[arg(long, required_unless_present = "summaries")]
    data: Option<PathBuf>,
    #[arg(long, num_args = 2, default_values = ["garch-re", "garch-n"])]
    model: Vec<Model>,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    paper_literal_aic: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_deltas(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

#[derive(Args)]
struct RvArgs {
    /// Tick CSV with `timestamp,price`
    #[arg(long)]
    ticks: PathBuf,
    /// Session calendar JSON; Tokyo sessions when absent
    #[arg(long)]
    calendar: Option<PathBuf>,
    /// Daily closes for the HL factor; last tick of each day when absent
    #[arg(long)]
    data: Option<PathBuf>,
    /// Sampling periods in seconds, comma separated
    #[arg(long, value_parser = parse_deltas, required = true)]
    delta_list: Vec<Vec<u64>>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected name=path, got {s:?}"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

#[derive(Args)]
struct RmspeArgs {
    #[arg(long)]
    ticks: PathBuf,
    #[arg(long)]
    calendar: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Model variances as name=path to a `vol_<model>.csv`; repeatable
    #[arg(long, value_parser = parse_named, required = true)]
    vols: Vec<(String, PathBuf)>,
    #[arg(long, value_parser = parse_deltas, required = true)]
    delta_list: Vec<Vec<u64>>,
    #[arg(long)]
    paper_literal_rmspe: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "garch-re")]
    model: Model,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Shape of the rational error law
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 250)]
    days: usize,
    #[arg(long)]
    calendar: Option<PathBuf>,
    #[arg(long, default_value_t = 1620)]
    steps_per_day: usize,
    /// Variance of the log-price observation noise
    #[arg(long, default_value_t = 0.0)]
    noise_rho2: f64,
    #[arg(long, default_value_t = 0.0)]
    overnight_fraction: f64,
    #[arg(long, default_value_t = 100.0)]
    initial_price: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl SimulateArgs {
    fn params(&self) -> GarchParams {
        match self.model {
            Model::GarchN => GarchParams::normal(
                self.omega.unwrap_or(1.3e-5),
                self.alpha.unwrap_or(0.148),
                self.beta.unwrap_or(0.836),
            ),
            Model::GarchRe => GarchParams::rational(
                self.omega.unwrap_or(2.8e-5),
                self.alpha.unwrap_or(0.132),
                self.beta.unwrap_or(0.858),
                self.a.unwrap_or(1.57),
            ),
        }
    }
}

fn aic_form(literal: bool) -> AicForm {
    if literal {
        AicForm::Literal
    } else {
        AicForm::Standard
    }
}

fn run(command: Command) -> rational_garch::Result<String> {
    match command {
        Command::Fit(a) => cmd_fit(&FitConfig {
            data: a.data,
            model: a.model,
            chain: a.chain.config(),
            thin: a.thin,
            aic_form: aic_form(a.paper_literal_aic),
            out_dir: a.out_dir,
        }),
        Command::Compare(a) => {
            let source = match (a.summaries, a.data) {
                (Some(s), _) => CompareSource::Summaries(s[0].clone(), s[1].clone()),
                (None, Some(data)) => CompareSource::InPlace {
                    data,
                    models: (a.model[0], a.model[1]),
                    chain: a.chain.config(),
                },
                (None, None) => unreachable!("clap requires one source"),
            };
            cmd_compare(&CompareConfig {
                source,
                aic_form: aic_form(a.paper_literal_aic),
                out_dir: a.out_dir,
            })
        }
        Command::Rv(a) => cmd_rv(&RvConfig {
            ticks: a.ticks,
            calendar: a.calendar,
            data: a.data,
            deltas: a.delta_list.concat(),
            out_dir: a.out_dir,
        }),
        Command::Rmspe(a) => cmd_rmspe(&RmspeConfig {
            ticks: a.ticks,
            calendar: a.calendar,
            data: a.data,
            vols: a.vols,
            deltas: a.delta_list.concat(),
            form: if a.paper_literal_rmspe { RmspeForm::Literal } else { RmspeForm::Mean },
            out_dir: a.out_dir,
        }),
        Command::Simulate(a) => cmd_simulate(&SimulateConfig {
            params: a.params(),
            days: a.days,
            calendar: a.calendar,
            steps_per_day: a.steps_per_day,
            noise_rho2: a.noise_rho2,
            overnight_fraction: a.overnight_fraction,
            initial_price: a.initial_price,
            seed: a.seed,
            out_dir: a.out_dir,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
