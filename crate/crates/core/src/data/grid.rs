//! Previous-tick sampling on session-local grids.

use std::time::Duration;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use super::{SessionCalendar, Tick, TickSeries};
use crate::error::{Error, Result};

/// Log-prices of one day, one grid per session.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDay {
    pub date: NaiveDate,
    pub sessions: Vec<Vec<f64>>,
}

impl GridDay {
    /// Number of intraday returns the day yields.
    pub fn n(&self) -> usize {
        self.sessions.iter().map(|s| s.len().saturating_sub(1)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPrices {
    pub delta_secs: i64,
    pub days: Vec<GridDay>,
    /// Trading days the calendar expected but the tick stream did not cover.
    pub skipped_days: Vec<NaiveDate>,
    pub warnings: Vec<String>,
}

fn delta_secs(delta: Duration) -> Result<i64> {
    if delta.is_zero() || delta.subsec_nanos() != 0 {
        return Err(Error::Validation(format!(
            "sampling period must be a positive whole number of seconds, got {delta:?}"
        )));
    }
    Ok(delta.as_secs() as i64)
}

/// Grid instants of a session of length `len` seconds: every `delta` from
/// the open, rounded down, or just open and close when `delta` exceeds the
/// session.
pub(crate) fn grid_offsets(len: i64, delta: i64) -> Vec<i64> {
    let m = len / delta;
    if m == 0 {
        vec![0, len]
    } else {
        (0..=m).map(|k| k * delta).collect()
    }
}

fn price_at(ticks: &[Tick], at: NaiveDateTime) -> f64 {
    let idx = ticks.partition_point(|t| t.time <= at);
    // Instants before the first tick of the day take the first tick.
    ticks[idx.saturating_sub(1)].price
}

/// Samples the last observed price at or before each grid instant.
///
/// Grids restart at every session open, so no interval spans a break.
/// Trading days without ticks are skipped and listed in `skipped_days`.
pub fn resample_grid(
    ticks: &TickSeries,
    calendar: &SessionCalendar,
    delta: Duration,
) -> Result<GridPrices> {
    let delta = delta_secs(delta)?;
    if ticks.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let by_day = ticks.by_day();
    let first = by_day[0].0;
    let last = by_day[by_day.len() - 1].0;

    let mut days = Vec::new();
    let mut skipped_days = Vec::new();
    let mut warnings = Vec::new();
    let mut cursor = by_day.iter().peekable();

    for date in calendar.trading_days(first, last) {
        while let Some((d, _)) = cursor.peek() {
            if *d < date {
                warnings.push(format!("ticks on non-trading day {d} ignored"));
                cursor.next();
            } else {
                break;
            }
        }
        let day_ticks = match cursor.peek() {
            Some((d, t)) if *d == date => {
                cursor.next();
                *t
            }
            _ => {
                warnings.push(format!("no ticks on trading day {date}; day skipped"));
                skipped_days.push(date);
                continue;
            }
        };
        let sessions = calendar
            .sessions_on(date)
            .iter()
            .map(|s| {
                let open = date.and_time(s.open);
                grid_offsets(s.length_secs(), delta)
                    .into_iter()
                    .map(|off| price_at(day_ticks, open + TimeDelta::seconds(off)).ln())
                    .collect()
            })
            .collect();
        days.push(GridDay { date, sessions });
    }
    for (d, _) in cursor {
        warnings.push(format!("ticks on non-trading day {d} ignored"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(GridPrices {
        delta_secs: delta,
        days,
        skipped_days,
        warnings,
    })
}

/// Intraday returns of one day, split by session.
#[derive(Debug, Clone, PartialEq)]
pub struct DayReturns {
    pub date: NaiveDate,
    pub sessions: Vec<Vec<f64>>,
}

impl DayReturns {
    pub fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.sessions.iter().flatten().copied()
    }

    pub fn count(&self) -> usize {
        self.sessions.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntradayReturns {
    pub delta_secs: i64,
    pub days: Vec<DayReturns>,
}

/// Log-price differences within each session. The return across a break
/// between sessions is not formed.
pub fn intraday_returns(grid: &GridPrices) -> IntradayReturns {
    let days = grid
        .days
        .iter()
        .map(|day| DayReturns {
            date: day.date,
            sessions: day
                .sessions
                .iter()
                .map(|p| p.windows(2).map(|w| w[1] - w[0]).collect())
                .collect(),
        })
        .collect();
    IntradayReturns {
        delta_secs: grid.delta_secs,
        days,
    }
}
