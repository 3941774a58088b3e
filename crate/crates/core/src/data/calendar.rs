//! Exchange trading sessions.
//!
//! Times are exchange-local wall clock. No time-zone arithmetic is done
//! anywhere in the crate.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One continuous trading session within a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub open: NaiveTime,
    pub close: NaiveTime,
}

impl Session {
    pub fn new(open: NaiveTime, close: NaiveTime) -> Self {
        Self { open, close }
    }

    pub fn hm(open: (u32, u32), close: (u32, u32)) -> Self {
        Self {
            open: NaiveTime::from_hms_opt(open.0, open.1, 0).expect("valid open time"),
            close: NaiveTime::from_hms_opt(close.0, close.1, 0).expect("valid close time"),
        }
    }

    pub fn length_secs(&self) -> i64 {
        (self.close - self.open).num_seconds()
    }
}

/// Sessions per weekday plus a holiday list.
///
/// The JSON form is
/// `{"mon": [{"open": "09:00:00", "close": "11:00:00"}, ...], ..., "holidays": ["2006-07-17"]}`;
/// missing weekdays have no sessions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    #[serde(default)]
    pub mon: Vec<Session>,
    #[serde(default)]
    pub tue: Vec<Session>,
    #[serde(default)]
    pub wed: Vec<Session>,
    #[serde(default)]
    pub thu: Vec<Session>,
    #[serde(default)]
    pub fri: Vec<Session>,
    #[serde(default)]
    pub sat: Vec<Session>,
    #[serde(default)]
    pub sun: Vec<Session>,
    #[serde(default)]
    pub holidays: BTreeSet<NaiveDate>,
}

impl SessionCalendar {
    /// Same sessions on Monday through Friday, nothing at weekends.
    pub fn weekdays(sessions: Vec<Session>) -> Result<Self> {
        let cal = Self {
            mon: sessions.clone(),
            tue: sessions.clone(),
            wed: sessions.clone(),
            thu: sessions.clone(),
            fri: sessions,
            sat: Vec::new(),
            sun: Vec::new(),
            holidays: BTreeSet::new(),
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Tokyo Stock Exchange: 09:00-11:00 and 12:30-15:00 on weekdays.
    pub fn tokyo() -> Self {
        Self::weekdays(vec![Session::hm((9, 0), (11, 0)), Session::hm((12, 30), (15, 0))])
            .expect("built-in calendar is valid")
    }

    /// A single 09:30-16:00 weekday session (390 minutes).
    pub fn single_session_390() -> Self {
        Self::weekdays(vec![Session::hm((9, 30), (16, 0))]).expect("built-in calendar is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Self = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn with_holidays(mut self, holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        self.holidays.extend(holidays);
        self
    }

    fn weekday_sessions(&self, day: Weekday) -> &[Session] {
        match day {
            Weekday::Mon => &self.mon,
            Weekday::Tue => &self.tue,
            Weekday::Wed => &self.wed,
            Weekday::Thu => &self.thu,
            Weekday::Fri => &self.fri,
            Weekday::Sat => &self.sat,
            Weekday::Sun => &self.sun,
        }
    }

    /// Sessions on `date`, empty for holidays and closed weekdays.
    pub fn sessions_on(&self, date: NaiveDate) -> &[Session] {
        if self.holidays.contains(&date) {
            return &[];
        }
        self.weekday_sessions(date.weekday())
    }

    pub fn is_trading_day(&self, date: NaiveDate) -> bool {
        !self.sessions_on(date).is_empty()
    }

    /// Total in-session seconds on `date`.
    pub fn trading_secs(&self, date: NaiveDate) -> i64 {
        self.sessions_on(date).iter().map(Session::length_secs).sum()
    }

    /// Trading days in `[from, to]`, inclusive.
    pub fn trading_days(&self, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
        from.iter_days()
            .take_while(|d| *d <= to)
            .filter(|d| self.is_trading_day(*d))
            .collect()
    }

    /// The first `count` trading days on or after `start`.
    pub fn next_trading_days(&self, start: NaiveDate, count: usize) -> Vec<NaiveDate> {
        if count > 0 && [&self.mon, &self.tue, &self.wed, &self.thu, &self.fri, &self.sat, &self.sun]
            .iter()
            .all(|s| s.is_empty())
        {
            return Vec::new();
        }
        start
            .iter_days()
            .filter(|d| self.is_trading_day(*d))
            .take(count)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for day in [
            Weekday::Mon,
            Weekday::Tue,
            Weekday::Wed,
            Weekday::Thu,
            Weekday::Fri,
            Weekday::Sat,
            Weekday::Sun,
        ] {
            let sessions = self.weekday_sessions(day);
            for s in sessions {
                if s.open >= s.close {
                    return Err(Error::Validation(format!(
                        "{day}: session {}-{} does not open before it closes",
                        s.open, s.close
                    )));
                }
            }
            for pair in sessions.windows(2) {
                if pair[1].open < pair[0].close {
                    return Err(Error::Validation(format!(
                        "{day}: sessions {}-{} and {}-{} overlap or are out of order",
                        pair[0].open, pair[0].close, pair[1].open, pair[1].close
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for SessionCalendar {
    fn default() -> Self {
        Self::tokyo()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokyo_has_270_trading_minutes() {
        let cal = SessionCalendar::tokyo();
        let monday = NaiveDate::from_ymd_opt(2006, 6, 5).unwrap();
        assert_eq!(cal.trading_secs(monday), 270 * 60);
        let saturday = NaiveDate::from_ymd_opt(2006, 6, 10).unwrap();
        assert!(!cal.is_trading_day(saturday));
    }

    #[test]
    fn holidays_close_the_day() {
        let d = NaiveDate::from_ymd_opt(2006, 7, 17).unwrap();
        let cal = SessionCalendar::tokyo().with_holidays([d]);
        assert!(cal.sessions_on(d).is_empty());
    }

    #[test]
    fn overlapping_sessions_rejected() {
        let res = SessionCalendar::weekdays(vec![
            Session::hm((9, 0), (11, 0)),
            Session::hm((10, 30), (15, 0)),
        ]);
        assert!(matches!(res, Err(Error::Validation(_))));
    }

    #[test]
    fn json_round_trip() {
        let cal = SessionCalendar::tokyo()
            .with_holidays([NaiveDate::from_ymd_opt(2007, 1, 2).unwrap()]);
        let back = SessionCalendar::from_json(&cal.to_json().unwrap()).unwrap();
        assert_eq!(cal, back);
    }

    #[test]
    fn partial_json_defaults_missing_weekdays() {
        let cal = SessionCalendar::from_json(
            r#"{"mon": [{"open": "09:00:00", "close": "15:00:00"}], "holidays": []}"#,
        )
        .unwrap();
        let tuesday = NaiveDate::from_ymd_opt(2006, 6, 6).unwrap();
        assert!(!cal.is_trading_day(tuesday));
    }
}
