//! Realized variance, volatility signature curves, the Hansen-Lunde
//! adjustment factor and RMSPE scoring of model variances.

use std::io::Write;
use std::time::Duration;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    daily_log_returns, intraday_returns, resample_grid, write_comments, IntradayReturns,
    ReturnSeries, SessionCalendar, TickSeries,
};
use crate::error::{Error, Result};
use crate::garch::VolSeries;

/// `Σ r_i²`. An empty day gives 0.
pub fn realized_variance(day_returns: &[f64]) -> f64 {
    if day_returns.is_empty() {
        log::warn!("realized variance of a day without returns is 0");
    }
    day_returns.iter().map(|r| r * r).sum()
}

/// Per-day realized variance at one sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct RvSeries {
    pub delta_secs: i64,
    pub entries: Vec<(NaiveDate, f64)>,
    /// Hansen-Lunde factor `c`, once computed.
    pub hl_factor: Option<f64>,
}

impl RvSeries {
    pub fn from_returns(returns: &IntradayReturns) -> Self {
        let entries = returns
            .days
            .iter()
            .map(|d| (d.date, d.all().map(|r| r * r).sum()))
            .collect();
        Self {
            delta_secs: returns.delta_secs,
            entries,
            hl_factor: None,
        }
    }

    pub fn with_hl_factor(mut self, c: f64) -> Self {
        self.hl_factor = Some(c);
        self
    }

    pub fn mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|(_, v)| v).sum::<f64>() / self.entries.len() as f64
    }

    /// `c · RV_t`, with `c = 1` when no factor is attached.
    pub fn adjusted(&self) -> Vec<(NaiveDate, f64)> {
        let c = self.hl_factor.unwrap_or(1.0);
        self.entries.iter().map(|(d, v)| (*d, c * v)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "date,rv,c_adjusted_rv")?;
        for (d, v) in &self.entries {
            match self.hl_factor {
                Some(c) => writeln!(w, "{},{},{}", d.format("%Y-%m-%d"), v, c * v)?,
                None => writeln!(w, "{},{},", d.format("%Y-%m-%d"), v)?,
            }
        }
        Ok(())
    }
}

/// Resample, difference and sum squares for one sampling period.
pub fn realized_series(ticks: &TickSeries, calendar: &SessionCalendar, delta: Duration) -> Result<RvSeries> {
    let grid = resample_grid(ticks, calendar, delta)?;
    Ok(RvSeries::from_returns(&intraday_returns(&grid)))
}

/// Inner join of two date-sorted series.
fn align<'a, A: Copy, B: Copy>(
    left: impl IntoIterator<Item = (NaiveDate, A)> + 'a,
    right: impl IntoIterator<Item = (NaiveDate, B)> + 'a,
) -> Vec<(NaiveDate, A, B)> {
    let left: Vec<_> = left.into_iter().collect();
    let right: Vec<_> = right.into_iter().collect();
    let mut out = Vec::with_capacity(left.len().min(right.len()));
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        match left[i].0.cmp(&right[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((left[i].0, left[i].1, right[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    let dropped = left.len() + right.len() - 2 * out.len();
    if dropped > 0 {
        log::info!("dropped {dropped} unmatched days while aligning series");
    }
    out
}

/// `c = Σ(R_t − R̄)² / Σ RV_t` over the days both series cover.
pub fn hl_factor(daily_returns: &ReturnSeries, rv: &RvSeries) -> Result<f64> {
    let pairs = align(daily_returns.iter(), rv.entries.iter().copied());
    if pairs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let den: f64 = pairs.iter().map(|p| p.2).sum();
    if !(den > 0.0) {
        return Err(Error::DivisionByZero {
            message: "realized variance sums to zero".into(),
            dates: pairs.iter().map(|p| p.0).collect(),
        });
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignaturePoint {
    pub delta_secs: i64,
    pub avg_rv: f64,
    pub hl_factor: Option<f64>,
    pub days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureCurve {
    pub points: Vec<SignaturePoint>,
}

impl SignatureCurve {
    pub fn from_series(series: &[RvSeries]) -> Self {
        Self {
            points: series
                .iter()
                .map(|s| SignaturePoint {
                    delta_secs: s.delta_secs,
                    avg_rv: s.mean(),
                    hl_factor: s.hl_factor,
                    days: s.entries.len(),
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "delta_seconds,avg_rv,hl_factor")?;
        for p in &self.points {
            match p.hl_factor {
                Some(c) => writeln!(w, "{},{},{}", p.delta_secs, p.avg_rv, c)?,
                None => writeln!(w, "{},{},", p.delta_secs, p.avg_rv)?,
            }
        }
        Ok(())
    }
}

/// Daily returns from the last tick of each day.
pub fn tick_daily_returns(ticks: &TickSeries) -> Result<ReturnSeries> {
    daily_log_returns(&ticks.daily_closes()?)
}

/// Realized-variance series with HL factor for every sampling period.
///
/// `daily` supplies the close-to-close returns for `c`; without it they are
/// taken from the last tick of each day.
pub fn rv_sweep(
    ticks: &TickSeries,
    calendar: &SessionCalendar,
    deltas: &[Duration],
    daily: Option<&ReturnSeries>,
) -> Result<Vec<RvSeries>> {
    if deltas.is_empty() {
        return Err(Error::Validation("sampling period list is empty".into()));
    }
    let derived;
    let daily = match daily {
        Some(d) => d,
        None => {
            derived = tick_daily_returns(ticks)?;
            &derived
        }
    };
    deltas
        .par_iter()
        .map(|&delta| {
            let rv = realized_series(ticks, calendar, delta)?;
            let c = hl_factor(daily, &rv)?;
            Ok(rv.with_hl_factor(c))
        })
        .collect()
}

/// Average realized variance and HL factor per sampling period.
pub fn signature_curve(
    ticks: &TickSeries,
    calendar: &SessionCalendar,
    deltas: &[Duration],
    daily: Option<&ReturnSeries>,
) -> Result<SignatureCurve> {
    Ok(SignatureCurve::from_series(&rv_sweep(ticks, calendar, deltas, daily)?))
}

/// Rescales model variances so their mean equals the population variance of
/// the daily returns over the common days.
pub fn scale_to_daily_variance(model_vols: &VolSeries, daily_returns: &ReturnSeries) -> Result<VolSeries> {
    let pairs = align(model_vols.iter(), daily_returns.iter());
    if pairs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = pairs.len() as f64;
    let mean_model = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_r = pairs.iter().map(|p| p.2).sum::<f64>() / n;
    let var_r = pairs.iter().map(|p| (p.2 - mean_r).powi(2)).sum::<f64>() / n;
    if !(mean_model > 0.0) {
        return Err(Error::DivisionByZero {
            message: "mean model variance is zero".into(),
            dates: Vec::new(),
        });
    }
    let k = var_r / mean_model;
    let (dates, vals) = pairs.iter().map(|p| (p.0, p.1 * k)).unzip();
    VolSeries::new(dates, vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmspeForm {
    /// `sqrt((1/N) Σ e_t²)`
    #[default]
    Mean,
    /// `sqrt(Σ e_t²)` without the `1/N`.
    Literal,
}

/// Root mean square of `(σ̄_t² − cRV_t) / cRV_t` over the common days.
pub fn rmspe(scaled_model_vols: &VolSeries, adjusted_rv: &RvSeries, form: RmspeForm) -> Result<f64> {
    let pairs = align(scaled_model_vols.iter(), adjusted_rv.adjusted());
    if pairs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let zero: Vec<NaiveDate> = pairs.iter().filter(|p| !(p.2 > 0.0)).map(|p| p.0).collect();
    if !zero.is_empty() {
        return Err(Error::DivisionByZero {
            message: format!("adjusted realized variance is zero on {} day(s)", zero.len()),
            dates: zero,
        });
    }
    let sum: f64 = pairs.iter().map(|p| ((p.1 - p.2) / p.2).powi(2)).sum();
    Ok(match form {
        RmspeForm::Mean => (sum / pairs.len() as f64).sqrt(),
        RmspeForm::Literal => sum.sqrt(),
    })
}
