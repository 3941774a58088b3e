//! Synthetic data: GARCH return paths and intraday diffusion prices with
//! microstructure noise and an overnight gap.

use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    write_comments, DailyPriceSeries, ReturnSeries, SessionCalendar, Tick, TickSeries,
    SYNTHETIC_START,
};
use crate::error::{Error, Result};
use crate::garch::{ErrorLaw, GarchParams, VolSeries};
use crate::rational::RationalDensity;

/// Simulates `length` returns and the variance path that generated them.
///
/// The recursion starts at the unconditional variance when it exists and at
/// `ω` otherwise. Dates are weekdays from [`SYNTHETIC_START`].
pub fn simulate_garch<R: Rng + ?Sized>(
    params: &GarchParams,
    length: usize,
    rng: &mut R,
) -> Result<(ReturnSeries, VolSeries)> {
    params.validate()?;
    if length == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let table = match params.law {
        ErrorLaw::Normal => None,
        ErrorLaw::Rational { a } => Some(RationalDensity::new(a)?.cdf_table()),
    };
    let mut s2 = params.unconditional_variance().unwrap_or(params.omega);
    let mut returns = Vec::with_capacity(length);
    let mut variances = Vec::with_capacity(length);
    for _ in 0..length {
        let eps: f64 = match &table {
            None => rng.sample(StandardNormal),
            Some(t) => rng.sample(t),
        };
        let y = s2.sqrt() * eps;
        returns.push(y);
        variances.push(s2);
        s2 = params.omega + params.alpha * y * y + params.beta * s2;
    }
    let returns = ReturnSeries::from_values(returns)?;
    let vols = VolSeries::new(returns.dates().to_vec(), variances)?;
    Ok((returns, vols))
}

/// In-session integrated variance of each simulated day. Spot variance is
/// constant within a day, so the integral is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionVariance {
    Constant(f64),
    PerDay(Vec<f64>),
}

impl SessionVariance {
    fn day(&self, i: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::PerDay(v) => v[i],
        }
    }
}

/// Independent Gaussian observation error on log prices.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Variance `ρ²` of each observation error.
    pub rho2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub calendar: SessionCalendar,
    pub start: NaiveDate,
    pub initial_price: f64,
    /// Euler steps per trading day; each step must be a whole number of
    /// seconds and divide every session.
    pub steps_per_day: usize,
    pub session_variance: SessionVariance,
    pub noise: NoiseModel,
    /// Share of the total close-to-close variance that falls overnight.
    pub overnight_fraction: f64,
    /// When set, each day's close-to-close log return is pinned to this value
    /// by bridging the free path onto it.
    pub close_returns: Option<Vec<f64>>,
}

impl DiffusionSpec {
    pub fn constant(calendar: SessionCalendar, steps_per_day: usize, session_variance: f64) -> Self {
        Self {
            calendar,
            start: SYNTHETIC_START,
            initial_price: 100.0,
            steps_per_day,
            session_variance: SessionVariance::Constant(session_variance),
            noise: NoiseModel::default(),
            overnight_fraction: 0.0,
            close_returns: None,
        }
    }

    pub fn with_noise(mut self, rho2: f64) -> Self {
        self.noise = NoiseModel { rho2 };
        self
    }

    pub fn with_overnight_fraction(mut self, f: f64) -> Self {
        self.overnight_fraction = f;
        self
    }

    fn validate(&self, days: usize) -> Result<()> {
        self.calendar.validate()?;
        if days == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if self.steps_per_day == 0 {
            return Err(Error::Validation("steps per day must be at least 1".into()));
        }
        if !(self.initial_price.is_finite() && self.initial_price > 0.0) {
            return Err(Error::Validation(format!("initial price must be > 0, got {}", self.initial_price)));
        }
        if !(0.0..1.0).contains(&self.overnight_fraction) {
            return Err(Error::Validation(format!(
                "overnight fraction must be in [0, 1), got {}",
                self.overnight_fraction
            )));
        }
        if !(self.noise.rho2.is_finite() && self.noise.rho2 >= 0.0) {
            return Err(Error::Validation(format!("noise variance must be >= 0, got {}", self.noise.rho2)));
        }
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        match &self.session_variance {
            SessionVariance::Constant(v) if bad(*v) => {
                return Err(Error::Validation(format!("session variance must be >= 0, got {v}")));
            }
            SessionVariance::PerDay(v) => {
                if v.len() < days {
                    return Err(Error::InsufficientData { needed: days, got: v.len() });
                }
                if let Some(x) = v.iter().find(|x| bad(**x)) {
                    return Err(Error::Validation(format!("session variance must be >= 0, got {x}")));
                }
            }
            _ => {}
        }
        if let Some(r) = &self.close_returns {
            if r.len() < days {
                return Err(Error::InsufficientData { needed: days, got: r.len() });
            }
        }
        Ok(())
    }
}

/// What the simulator actually used for one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayTruth {
    pub date: NaiveDate,
    pub integrated_variance: f64,
    pub overnight_variance: f64,
    /// Noise-free close-to-close log return.
    pub close_return: f64,
    /// GARCH conditional variance, for markets driven by a GARCH path.
    pub garch_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMarket {
    pub ticks: TickSeries,
    /// Noise-free closing prices.
    pub daily: DailyPriceSeries,
    pub truth: Vec<DayTruth>,
}

impl SimulatedMarket {
    pub fn write_truth_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "date,integrated_variance,overnight_variance,close_return,garch_variance")?;
        for t in &self.truth {
            let g = t.garch_variance.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                t.date.format("%Y-%m-%d"),
                t.integrated_variance,
                t.overnight_variance,
                t.close_return,
                g
            )?;
        }
        Ok(())
    }
}

/// One day of log-price offsets relative to the previous close.
struct DayPath {
    ticks: Vec<(chrono::NaiveDateTime, f64, f64)>,
    close: f64,
    overnight_variance: f64,
}

fn day_stream(seed: u64, index: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index as u64 + lane);
    rng
}

fn simulate_day(spec: &DiffusionSpec, date: NaiveDate, index: usize, seed: u64) -> Result<DayPath> {
    let sessions = spec.calendar.sessions_on(date);
    let h = spec.calendar.trading_secs(date);
    let n = spec.steps_per_day as i64;
    if h % n != 0 {
        return Err(Error::Validation(format!(
            "{n} steps do not divide the {h} s trading day on {date}"
        )));
    }
    let dt = h / n;
    if let Some(s) = sessions.iter().find(|s| s.length_secs() % dt != 0) {
        return Err(Error::Validation(format!(
            "step of {dt} s does not divide the session {}-{} on {date}",
            s.open, s.close
        )));
    }

    let iv = spec.session_variance.day(index);
    let f = spec.overnight_fraction;
    let gap_var = iv * f / (1.0 - f);
    let step_var = iv / n as f64;
    let mut path = day_stream(seed, index, 0);
    let mut noise = day_stream(seed, index, 1);

    // free path: gap first, then one increment per step
    let mut x = gap_var.sqrt() * path.sample::<f64, _>(StandardNormal);
    let mut levels = Vec::with_capacity(spec.steps_per_day + sessions.len());
    let mut cum_var = Vec::with_capacity(levels.capacity());
    let mut v = gap_var;
    for s in sessions {
        let m = s.length_secs() / dt;
        for k in 0..=m {
            if k > 0 {
                x += step_var.sqrt() * path.sample::<f64, _>(StandardNormal);
                v += step_var;
            }
            levels.push((date.and_time(s.open) + Duration::seconds(k * dt), x));
            cum_var.push(v);
        }
    }
    let mut close = x;
    if let Some(targets) = &spec.close_returns {
        let total = gap_var + iv;
        let miss = targets[index] - x;
        for ((_, l), c) in levels.iter_mut().zip(&cum_var) {
            *l += if total > 0.0 { miss * c / total } else { miss };
        }
        // the last tick carries the full correction
        close = targets[index];
        if let Some(last) = levels.last_mut() {
            last.1 = close;
        }
    }
    let sd = spec.noise.rho2.sqrt();
    let ticks = levels
        .into_iter()
        .map(|(t, l)| (t, l, sd * noise.sample::<f64, _>(StandardNormal)))
        .collect();
    Ok(DayPath {
        ticks,
        close,
        overnight_variance: gap_var,
    })
}

/// Euler simulation of log prices over `days` trading days.
///
/// Spot variance is constant within a day and zero between sessions. Each
/// day draws from its own ChaCha streams derived from `seed` and the day
/// index, so the output does not depend on scheduling.
pub fn simulate_intraday(spec: &DiffusionSpec, days: usize, seed: u64) -> Result<SimulatedMarket> {
    spec.validate(days)?;
    let dates = spec.calendar.next_trading_days(spec.start, days);
    let paths: Vec<DayPath> = dates
        .par_iter()
        .enumerate()
        .map(|(i, d)| simulate_day(spec, *d, i, seed))
        .collect::<Result<_>>()?;

    let mut level = spec.initial_price.ln();
    let mut ticks = Vec::with_capacity(paths.iter().map(|p| p.ticks.len()).sum());
    let mut closes = Vec::with_capacity(days);
    let mut truth = Vec::with_capacity(days);
    for (i, (date, p)) in dates.iter().zip(paths).enumerate() {
        ticks.extend(p.ticks.iter().map(|&(time, l, e)| Tick {
            time,
            price: (level + l + e).exp(),
        }));
        truth.push(DayTruth {
            date: *date,
            integrated_variance: spec.session_variance.day(i),
            overnight_variance: p.overnight_variance,
            close_return: p.close,
            garch_variance: None,
        });
        level += p.close;
        closes.push((*date, level.exp()));
    }
    Ok(SimulatedMarket {
        ticks: TickSeries::new(ticks)?,
        daily: DailyPriceSeries::new(closes)?,
        truth,
    })
}

/// An intraday market whose close-to-close returns follow a GARCH path.
///
/// The day's GARCH variance is split between the overnight gap and the
/// sessions by `template.overnight_fraction`; the template's own variance
/// and close returns are replaced.
pub fn simulate_garch_market(
    params: &GarchParams,
    days: usize,
    template: &DiffusionSpec,
    seed: u64,
) -> Result<SimulatedMarket> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let (returns, vols) = simulate_garch(params, days, &mut rng)?;
    let f = template.overnight_fraction;
    let spec = DiffusionSpec {
        session_variance: SessionVariance::PerDay(vols.variances().iter().map(|v| v * (1.0 - f)).collect()),
        close_returns: Some(returns.values().to_vec()),
        ..template.clone()
    };
    let mut market = simulate_intraday(&spec, days, seed)?;
    for (t, v) in market.truth.iter_mut().zip(vols.variances()) {
        t.garch_variance = Some(*v);
    }
    Ok(market)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{daily_log_returns, Session};
    use crate::realized::realized_series;
    use approx::assert_abs_diff_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sample_variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn iid_normal_when_no_dynamics() {
        let p = GarchParams::normal(2e-4, 0.0, 0.0);
        let (r, v) = simulate_garch(&p, 100_000, &mut rng(3)).unwrap();
        assert!(v.variances().iter().all(|x| *x == 2e-4));
        let se = 2e-4 * (2.0 / 1e5f64).sqrt();
        assert!((sample_variance(r.values()) - 2e-4).abs() < 3.0 * se);
    }

    #[test]
    fn garch_is_deterministic() {
        let p = GarchParams::rational(1.3e-5, 0.148, 0.836, 1.57);
        let a = simulate_garch(&p, 500, &mut rng(9)).unwrap();
        let b = simulate_garch(&p, 500, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rational_garch_standardized_returns() {
        // y² has infinite variance here, so check the driving law instead
        let p = GarchParams::rational(2.8e-5, 0.132, 0.858, 1.57);
        let (r, v) = simulate_garch(&p, 100_000, &mut rng(11)).unwrap();
        let z2 = r.values().iter().zip(v.variances()).map(|(y, s)| y * y / s).sum::<f64>() / 1e5;
        assert!((z2 - 1.0).abs() < 0.10, "{z2}");
    }

    #[test]
    fn long_run_variance() {
        // (α+β)² + 2α² < 1 keeps the fourth moment finite
        let p = GarchParams::normal(1e-5, 0.05, 0.9);
        let target = p.unconditional_variance().unwrap();
        let (r, _) = simulate_garch(&p, 100_000, &mut rng(11)).unwrap();
        let got = sample_variance(r.values());
        assert!((got / target - 1.0).abs() < 0.05, "{got} vs {target}");
    }

    #[test]
    fn garch_rejects_bad_params() {
        assert!(matches!(
            simulate_garch(&GarchParams::normal(-1.0, 0.1, 0.8), 10, &mut rng(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn first_variance_is_omega_when_not_stationary() {
        let p = GarchParams::normal(1e-5, 0.5, 0.6);
        let (_, v) = simulate_garch(&p, 3, &mut rng(0)).unwrap();
        assert_eq!(v.variances()[0], 1e-5);
    }

    fn spec390(n: usize, iv: f64) -> DiffusionSpec {
        DiffusionSpec::constant(SessionCalendar::single_session_390(), n, iv)
    }

    #[test]
    fn truth_is_exact() {
        let spec = DiffusionSpec {
            session_variance: SessionVariance::PerDay(vec![1e-4, 2.5e-4, 3.3e-5]),
            ..DiffusionSpec::constant(SessionCalendar::tokyo(), 270, 0.0)
        }
        .with_overnight_fraction(0.25);
        let m = simulate_intraday(&spec, 3, 1).unwrap();
        let iv: Vec<f64> = m.truth.iter().map(|t| t.integrated_variance).collect();
        assert_eq!(iv, vec![1e-4, 2.5e-4, 3.3e-5]);
        assert_eq!(m.truth[1].overnight_variance, 2.5e-4 * 0.25 / 0.75);
    }

    #[test]
    fn tick_layout_follows_sessions() {
        let m = simulate_intraday(&DiffusionSpec::constant(SessionCalendar::tokyo(), 270, 1e-4), 2, 0).unwrap();
        // 120 + 150 one-minute steps plus an opening tick per session
        assert_eq!(m.ticks.len(), 2 * 272);
        let by_day = m.ticks.by_day();
        assert_eq!(by_day.len(), 2);
        let first = by_day[0].1;
        assert_eq!(first[0].time.format("%H:%M").to_string(), "09:00");
        assert_eq!(first[120].time.format("%H:%M").to_string(), "11:00");
        assert_eq!(first[121].time.format("%H:%M").to_string(), "12:30");
        // no variance over lunch and no noise: same price either side
        assert_eq!(first[120].price, first[121].price);
        assert_eq!(first.last().unwrap().price, m.daily.entries()[0].1);
    }

    #[test]
    fn rejects_steps_that_do_not_fit() {
        let spec = DiffusionSpec::constant(SessionCalendar::tokyo(), 7, 1e-4);
        assert!(matches!(simulate_intraday(&spec, 1, 0), Err(Error::Validation(_))));
        let spec = spec390(390, 1e-4).with_overnight_fraction(1.0);
        assert!(matches!(simulate_intraday(&spec, 1, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn prefix_of_longer_run_matches() {
        let spec = spec390(78, 1e-4).with_noise(1e-8).with_overnight_fraction(0.3);
        let short = simulate_intraday(&spec, 4, 5).unwrap();
        let long = simulate_intraday(&spec, 9, 5).unwrap();
        assert_eq!(short.ticks.entries(), &long.ticks.entries()[..short.ticks.len()]);
        assert_eq!(short.truth[..], long.truth[..4]);
        let other = simulate_intraday(&spec, 4, 6).unwrap();
        assert_ne!(short.ticks, other.ticks);
    }

    #[test]
    fn squared_daily_returns_match_integrated_variance() {
        let spec = spec390(78, 1e-4);
        let m = simulate_intraday(&spec, 4001, 2).unwrap();
        let r = daily_log_returns(&m.daily).unwrap();
        let ms = r.values().iter().map(|x| x * x).sum::<f64>() / r.len() as f64;
        // relative SE of a mean of squared normals is sqrt(2/N)
        assert!((ms / 1e-4 - 1.0).abs() < 3.0 * (2.0 / 4000f64).sqrt(), "{ms}");
    }

    #[test]
    fn realized_variance_converges_to_integrated_variance() {
        let m = simulate_intraday(&spec390(390, 1e-4), 200, 4).unwrap();
        let rv = realized_series(&m.ticks, &SessionCalendar::single_session_390(), std::time::Duration::from_secs(60)).unwrap();
        assert_eq!(rv.entries.len(), 200);
        assert!((rv.mean() / 1e-4 - 1.0).abs() < 0.02, "{}", rv.mean());
    }

    #[test]
    fn pure_noise_day() {
        let rho2 = 1e-8;
        let m = simulate_intraday(&spec390(390, 0.0).with_noise(rho2), 200, 8).unwrap();
        assert!(m.daily.entries().iter().all(|(_, p)| (p - 100.0).abs() < 1e-12));
        let rv = realized_series(&m.ticks, &SessionCalendar::single_session_390(), std::time::Duration::from_secs(60)).unwrap();
        let want = 2.0 * 390.0 * rho2;
        assert!((rv.mean() / want - 1.0).abs() < 0.05, "{} vs {want}", rv.mean());
    }

    #[test]
    fn noise_increments_are_ma1() {
        // 10⁵ noise-only returns inside one long session
        let cal = SessionCalendar::weekdays(vec![Session::hm((0, 0), (23, 20))]).unwrap();
        let spec = DiffusionSpec::constant(cal, 84_000, 0.0).with_noise(1.0);
        let m = simulate_intraday(&spec, 2, 12).unwrap();
        let eta: Vec<f64> = m
            .ticks
            .by_day()
            .iter()
            .flat_map(|(_, t)| t.windows(2).map(|w| (w[1].price / w[0].price).ln()).collect::<Vec<_>>())
            .collect();
        assert!(eta.len() >= 100_000);
        let (x, y) = (&eta[..eta.len() - 1], &eta[1..]);
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        assert_abs_diff_eq!(sxy / sxx, -0.5, epsilon = 0.01);
    }

    #[test]
    fn pinned_close_returns() {
        let targets: Vec<f64> = (0..6).map(|i| 0.01 * (i as f64 - 2.5)).collect();
        let spec = DiffusionSpec {
            close_returns: Some(targets.clone()),
            ..spec390(78, 1e-4).with_noise(1e-8).with_overnight_fraction(0.5)
        };
        let m = simulate_intraday(&spec, 6, 3).unwrap();
        let r = daily_log_returns(&m.daily).unwrap();
        for (got, want) in r.values().iter().zip(&targets[1..]) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        for (t, want) in m.truth.iter().zip(&targets) {
            assert_eq!(t.close_return, *want);
        }
    }

    #[test]
    fn garch_market_carries_the_garch_path() {
        let p = GarchParams::rational(1.3e-5, 0.148, 0.836, 1.57);
        let tpl = spec390(78, 0.0).with_overnight_fraction(0.4);
        let m = simulate_garch_market(&p, 50, &tpl, 21).unwrap();
        let (ret, vol) = simulate_garch(&p, 50, &mut {
            let mut r = ChaCha8Rng::seed_from_u64(21);
            r.set_stream(u64::MAX);
            r
        })
        .unwrap();
        for ((t, v), y) in m.truth.iter().zip(vol.variances()).zip(ret.values()) {
            assert_eq!(t.garch_variance, Some(*v));
            assert_eq!(t.integrated_variance, v * 0.6);
            assert_eq!(t.close_return, *y);
        }
        let mut buf = Vec::new();
        m.write_truth_csv(&mut buf, &["seed=21".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=21\ndate,integrated_variance,overnight_variance,close_return,garch_variance\n"));
        assert_eq!(text.lines().count(), 52);
    }
}
