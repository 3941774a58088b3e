//! Batch pipelines behind the `rgarch` subcommands.
//!
//! Each command reads its inputs, writes artifacts into an output directory
//! and returns a text report. Every artifact records the resolved
//! configuration and the SHA-256 of the inputs it was computed from.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{daily_log_returns, DailyPriceSeries, ReturnSeries, SessionCalendar, TickSeries};
use crate::error::{Error, Result};
use crate::garch::{GarchParams, VolSeries};
use crate::mcmc::{run_chain, ChainConfig, ChainSummary, Model};
use crate::realized::{rmspe, rv_sweep, scale_to_daily_variance, RmspeForm, SignatureCurve};
use crate::selection::{compare, AicForm, Comparison, FitScore};
use crate::simulate::{simulate_garch_market, DiffusionSpec, NoiseModel};

/// An input file as recorded in outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

struct Loaded {
    bytes: Vec<u8>,
    record: InputFile,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Loaded {
        bytes,
        record: InputFile {
            path: path.display().to_string(),
            sha256,
        },
    })
}

fn load_daily(path: &Path) -> Result<(DailyPriceSeries, InputFile)> {
    let f = load(path)?;
    Ok((DailyPriceSeries::from_csv(f.bytes.as_slice())?, f.record))
}

fn load_ticks(path: &Path) -> Result<(TickSeries, InputFile)> {
    let f = load(path)?;
    Ok((TickSeries::from_csv(f.bytes.as_slice())?, f.record))
}

fn load_calendar(path: Option<&Path>) -> Result<(SessionCalendar, Option<InputFile>)> {
    match path {
        None => Ok((SessionCalendar::tokyo(), None)),
        Some(p) => {
            let f = load(p)?;
            let text = String::from_utf8(f.bytes)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?;
            Ok((SessionCalendar::from_json(&text)?, Some(f.record)))
        }
    }
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join(name);
    let err = |e| Error::io(path.display().to_string(), e);
    let mut w = BufWriter::new(File::create(&path).map_err(err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(err)?;
    Ok(path)
}

/// Comment lines: the configuration as one JSON line, then extra facts.
fn header<T: Serialize>(config: &T, extra: &[String]) -> Result<Vec<String>> {
    let mut out = vec![format!("config: {}", serde_json::to_string(config)?)];
    out.extend_from_slice(extra);
    Ok(out)
}

fn durations(deltas: &[u64]) -> Result<Vec<Duration>> {
    if deltas.is_empty() {
        return Err(Error::Validation("sampling period list is empty".into()));
    }
    Ok(deltas.iter().map(|&s| Duration::from_secs(s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub data: PathBuf,
    pub model: Model,
    pub chain: ChainConfig,
    /// Every `thin`-th retained sample enters the posterior-mean variance path.
    pub thin: usize,
    pub aic_form: AicForm,
    pub out_dir: PathBuf,
}

/// `summary_<model>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    pub config: FitConfig,
    pub data: InputFile,
    pub observations: usize,
    pub score: FitScore,
    pub summary: ChainSummary,
}

/// The part of a fit record needed for comparison.
#[derive(Debug, Clone, Deserialize)]
struct StoredFit {
    data: InputFile,
    score: FitScore,
}

/// Fits one model and writes `chain_<model>.csv`, `summary_<model>.json`
/// and `vol_<model>.csv`.
pub fn cmd_fit(config: &FitConfig) -> Result<String> {
    let (prices, data) = load_daily(&config.data)?;
    let returns = daily_log_returns(&prices)?;
    let chain = run_chain(config.model, &returns, &config.chain)?;
    let score = FitScore::from_chain(&chain, config.aic_form);
    let vols = chain.posterior_mean_variances(&returns, config.thin)?;

    let label = config.model.label();
    let comments = header(
        config,
        &[format!("seed: {}", config.chain.seed), format!("data sha256: {}", data.sha256)],
    )?;
    let record = FitRecord {
        config: config.clone(),
        data,
        observations: returns.len(),
        score,
        summary: chain.summary().clone(),
    };
    let json = serde_json::to_string_pretty(&record)?;
    write_file(&config.out_dir, &format!("chain_{label}.csv"), |w| chain.write_csv(w, &comments))?;
    write_file(&config.out_dir, &format!("summary_{label}.json"), |w| writeln!(w, "{json}"))?;
    write_file(&config.out_dir, &format!("vol_{label}.csv"), |w| vols.write_csv(w, &comments))?;

    Ok(format!(
        "{}AIC {:.2}   DIC {:.2}\n",
        chain.summary().table(),
        record.score.aic,
        record.score.dic
    ))
}

/// Where the two fits for a comparison come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareSource {
    /// Two `summary_<model>.json` files.
    Summaries(PathBuf, PathBuf),
    /// Fit both models on one daily CSV.
    InPlace { data: PathBuf, models: (Model, Model), chain: ChainConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub source: CompareSource,
    pub aic_form: AicForm,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct CompareRecord<'a> {
    config: &'a CompareConfig,
    data: InputFile,
    comparison: Comparison,
}

fn rescore(s: &FitScore, form: AicForm) -> FitScore {
    FitScore::new(s.model.clone(), s.k, s.ln_l_at_mean, s.mean_ln_l, form)
}

/// Scores two fits by AIC and DIC; writes `comparison.json`.
pub fn cmd_compare(config: &CompareConfig) -> Result<String> {
    let (data, first, second) = match &config.source {
        CompareSource::Summaries(a, b) => {
            let read = |p: &Path| -> Result<StoredFit> {
                let f = load(p)?;
                serde_json::from_slice(&f.bytes).map_err(|e| {
                    Error::Validation(format!("{}: not a fit summary: {e}", p.display()))
                })
            };
            let (a, b) = (read(a)?, read(b)?);
            if a.data.sha256 != b.data.sha256 {
                return Err(Error::Validation(format!(
                    "fits were made on different datasets ({} has sha256 {}, {} has sha256 {}); \
                     information criteria are only comparable on identical data",
                    a.data.path, a.data.sha256, b.data.path, b.data.sha256
                )));
            }
            (a.data, rescore(&a.score, config.aic_form), rescore(&b.score, config.aic_form))
        }
        CompareSource::InPlace { data, models, chain } => {
            let (prices, record) = load_daily(data)?;
            let returns = daily_log_returns(&prices)?;
            let fit = |m| -> Result<FitScore> {
                Ok(FitScore::from_chain(&run_chain(m, &returns, chain)?, config.aic_form))
            };
            (record, fit(models.0)?, fit(models.1)?)
        }
    };
    let comparison = compare(first, second);
    let table = comparison.table();
    let json = serde_json::to_string_pretty(&CompareRecord {
        config,
        data,
        comparison,
    })?;
    write_file(&config.out_dir, "comparison.json", |w| writeln!(w, "{json}"))?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvConfig {
    pub ticks: PathBuf,
    pub calendar: Option<PathBuf>,
    /// Daily closes for the HL factor; the last tick of each day otherwise.
    pub data: Option<PathBuf>,
    pub deltas: Vec<u64>,
    pub out_dir: PathBuf,
}

/// Writes `rv_<Δ>s.csv` per sampling period, `signature.csv` and
/// `hl_factor.csv`.
pub fn cmd_rv(config: &RvConfig) -> Result<String> {
    let deltas = durations(&config.deltas)?;
    let (ticks, tick_file) = load_ticks(&config.ticks)?;
    let (calendar, cal_file) = load_calendar(config.calendar.as_deref())?;
    let mut inputs = vec![format!("ticks sha256: {}", tick_file.sha256)];
    if let Some(c) = cal_file {
        inputs.push(format!("calendar sha256: {}", c.sha256));
    }
    let daily = match &config.data {
        Some(p) => {
            let (prices, f) = load_daily(p)?;
            inputs.push(format!("data sha256: {}", f.sha256));
            Some(daily_log_returns(&prices)?)
        }
        None => None,
    };
    let comments = header(config, &inputs)?;

    let series = rv_sweep(&ticks, &calendar, &deltas, daily.as_ref())?;
    for s in &series {
        write_file(&config.out_dir, &format!("rv_{}s.csv", s.delta_secs), |w| s.write_csv(w, &comments))?;
    }
    let curve = SignatureCurve::from_series(&series);
    write_file(&config.out_dir, "signature.csv", |w| curve.write_csv(w, &comments))?;
    write_file(&config.out_dir, "hl_factor.csv", |w| {
        crate::data::write_comments(w, &comments)?;
        writeln!(w, "delta_seconds,hl_factor")?;
        for p in &curve.points {
            writeln!(w, "{},{}", p.delta_secs, p.hl_factor.unwrap_or(f64::NAN))?;
        }
        Ok(())
    })?;

    let mut out = format!("{:>10}{:>16}{:>10}{:>8}\n", "delta_s", "avg_rv", "c", "days");
    for p in &curve.points {
        out += &format!(
            "{:>10}{:>16.6e}{:>10.4}{:>8}\n",
            p.delta_secs,
            p.avg_rv,
            p.hl_factor.unwrap_or(f64::NAN),
            p.days
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmspeConfig {
    pub ticks: PathBuf,
    pub calendar: Option<PathBuf>,
    /// Daily closes: daily returns for `c` and for scaling the model variances.
    pub data: PathBuf,
    /// Named model variance files (`date,variance`).
    pub vols: Vec<(String, PathBuf)>,
    pub deltas: Vec<u64>,
    pub form: RmspeForm,
    pub out_dir: PathBuf,
}

/// RMSPE of each model against `c(Δ)`-adjusted RV for every Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct RmspeTable {
    pub models: Vec<String>,
    /// `(Δ seconds, c, RMSPE per model)`.
    pub rows: Vec<(i64, f64, Vec<f64>)>,
}

impl RmspeTable {
    /// The Δ with the smallest RMSPE for model `j`, and that RMSPE.
    pub fn best(&self, j: usize) -> Option<(i64, f64)> {
        self.rows
            .iter()
            .map(|(d, _, v)| (*d, v[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        crate::data::write_comments(&mut w, comments)?;
        writeln!(w, "delta_seconds,hl_factor,{}", self.models.join(","))?;
        for (d, c, v) in &self.rows {
            let v: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{d},{c},{}", v.join(","))?;
        }
        Ok(())
    }
}

/// The RMSPE sweep without any file I/O.
pub fn rmspe_sweep(
    ticks: &TickSeries,
    calendar: &SessionCalendar,
    daily: &ReturnSeries,
    models: &[(String, VolSeries)],
    deltas: &[Duration],
    form: RmspeForm,
) -> Result<RmspeTable> {
    let scaled: Vec<VolSeries> = models
        .iter()
        .map(|(_, v)| scale_to_daily_variance(v, daily))
        .collect::<Result<_>>()?;
    let rows = rv_sweep(ticks, calendar, deltas, Some(daily))?
        .iter()
        .map(|rv| {
            let errs = scaled.iter().map(|s| rmspe(s, rv, form)).collect::<Result<_>>()?;
            Ok((rv.delta_secs, rv.hl_factor.unwrap_or(f64::NAN), errs))
        })
        .collect::<Result<_>>()?;
    Ok(RmspeTable {
        models: models.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    })
}

/// Writes `rmspe.csv`.
pub fn cmd_rmspe(config: &RmspeConfig) -> Result<String> {
    if config.vols.is_empty() {
        return Err(Error::Validation("no model variance files given".into()));
    }
    let deltas = durations(&config.deltas)?;
    let (ticks, tick_file) = load_ticks(&config.ticks)?;
    let (calendar, cal_file) = load_calendar(config.calendar.as_deref())?;
    let (prices, data_file) = load_daily(&config.data)?;
    let daily = daily_log_returns(&prices)?;
    let mut inputs = vec![
        format!("ticks sha256: {}", tick_file.sha256),
        format!("data sha256: {}", data_file.sha256),
    ];
    if let Some(c) = cal_file {
        inputs.push(format!("calendar sha256: {}", c.sha256));
    }
    let mut models = Vec::with_capacity(config.vols.len());
    for (name, path) in &config.vols {
        let f = load(path)?;
        inputs.push(format!("{name} sha256: {}", f.record.sha256));
        models.push((name.clone(), VolSeries::from_csv(f.bytes.as_slice())?));
    }
    let comments = header(config, &inputs)?;

    let table = rmspe_sweep(&ticks, &calendar, &daily, &models, &deltas, config.form)?;
    write_file(&config.out_dir, "rmspe.csv", |w| table.write_csv(w, &comments))?;

    let mut out = format!("{:>10}{:>10}", "delta_s", "c");
    for m in &table.models {
        out += &format!("{m:>14}");
    }
    out.push('\n');
    for (d, c, v) in &table.rows {
        out += &format!("{d:>10}{c:>10.4}");
        for x in v {
            out += &format!("{x:>14.5}");
        }
        out.push('\n');
    }
    for (j, m) in table.models.iter().enumerate() {
        if let Some((d, e)) = table.best(j) {
            out += &format!("{m}: minimum {e:.5} at {d} s\n");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub params: GarchParams,
    pub days: usize,
    pub calendar: Option<PathBuf>,
    pub steps_per_day: usize,
    pub noise_rho2: f64,
    pub overnight_fraction: f64,
    pub initial_price: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Simulates a GARCH-driven intraday market; writes `daily.csv`,
/// `ticks.csv` and `truth.csv`.
pub fn cmd_simulate(config: &SimulateConfig) -> Result<String> {
    let (calendar, cal_file) = load_calendar(config.calendar.as_deref())?;
    let template = DiffusionSpec {
        initial_price: config.initial_price,
        noise: NoiseModel { rho2: config.noise_rho2 },
        overnight_fraction: config.overnight_fraction,
        ..DiffusionSpec::constant(calendar, config.steps_per_day, 0.0)
    };
    let market = simulate_garch_market(&config.params, config.days, &template, config.seed)?;

    let mut extra = vec![
        format!("seed: {}", config.seed),
        format!("garch: {}", serde_json::to_string(&config.params)?),
    ];
    if let Some(c) = cal_file {
        extra.push(format!("calendar sha256: {}", c.sha256));
    }
    let comments = header(config, &extra)?;
    let dir = &config.out_dir;
    write_file(dir, "daily.csv", |w| market.daily.write_csv(w, &comments))?;
    write_file(dir, "ticks.csv", |w| market.ticks.write_csv(w, &comments))?;
    write_file(dir, "truth.csv", |w| market.write_truth_csv(w, &comments))?;
    Ok(format!(
        "{} days, {} ticks written to {}\n",
        market.daily.len(),
        market.ticks.len(),
        dir.display()
    ))
}
