//! Daily and intraday price data: ingestion, session calendar, regular
//! sampling grids and return construction.

mod calendar;
mod grid;

use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};

pub use calendar::{Session, SessionCalendar};
pub use grid::{intraday_returns, resample_grid, DayReturns, GridDay, GridPrices, IntradayReturns};

use crate::error::{Error, Result};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// First date used when a return series is built without explicit dates.
pub const SYNTHETIC_START: NaiveDate = match NaiveDate::from_ymd_opt(2006, 6, 5) {
    Some(d) => d,
    None => panic!("valid date"),
};

/// Close prices by date.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyPriceSeries {
    entries: Vec<(NaiveDate, f64)>,
}

impl DailyPriceSeries {
    /// Sorts by date, then checks for duplicates and non-positive prices.
    pub fn new(mut entries: Vec<(NaiveDate, f64)>) -> Result<Self> {
        entries.sort_by_key(|(d, _)| *d);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Validation(format!("duplicate date {}", pair[0].0)));
            }
        }
        if let Some((d, p)) = entries.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Validation(format!("non-positive price {p} on {d}")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(NaiveDate, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        Self::new(read_dated_values(reader, "close")?)
    }

    /// Writes `date,close`, preceded by `# ` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "date,close")?;
        for (d, p) in &self.entries {
            writeln!(w, "{},{}", d.format("%Y-%m-%d"), p)?;
        }
        Ok(())
    }
}

/// Reads a daily CSV (`date,close`) from any byte stream.
pub fn load_daily_prices<R: Read>(source: R) -> Result<DailyPriceSeries> {
    DailyPriceSeries::from_csv(source)
}

/// Dated log-returns with their cached mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    mean: f64,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Validation(format!(
                "{} dates for {} returns",
                dates.len(),
                values.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("return dates must be strictly increasing".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                index: i,
                message: "return is not finite".into(),
            });
        }
        let mean = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        Ok(Self { dates, values, mean })
    }

    /// Dates the values on consecutive weekdays starting at [`SYNTHETIC_START`].
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let dates = SessionCalendar::tokyo().next_trading_days(SYNTHETIC_START, values.len());
        Self::new(dates, values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Population variance, `Σ(R_t − R̄)² / N`.
    pub fn variance(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|r| (r - self.mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }
}

/// `ln P_t − ln P_{t−1}`, dated by the later day.
pub fn daily_log_returns(prices: &DailyPriceSeries) -> Result<ReturnSeries> {
    let e = prices.entries();
    if e.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: e.len(),
        });
    }
    let (dates, values) = e
        .windows(2)
        .map(|w| (w[1].0, w[1].1.ln() - w[0].1.ln()))
        .unzip();
    ReturnSeries::new(dates, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub time: NaiveDateTime,
    pub price: f64,
}

/// Timestamped trade prices, exchange-local time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickSeries {
    entries: Vec<Tick>,
}

impl TickSeries {
    pub fn new(entries: Vec<Tick>) -> Result<Self> {
        if let Some(w) = entries.windows(2).find(|w| w[1].time < w[0].time) {
            return Err(Error::Validation(format!(
                "tick timestamps decrease at {}",
                w[1].time
            )));
        }
        if let Some(t) = entries.iter().find(|t| !(t.price.is_finite() && t.price > 0.0)) {
            return Err(Error::Validation(format!(
                "non-positive price {} at {}",
                t.price, t.time
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Tick] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ticks grouped by calendar date, in order.
    pub fn by_day(&self) -> Vec<(NaiveDate, &[Tick])> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.entries.len() {
            if i == self.entries.len() || self.entries[i].time.date() != self.entries[start].time.date()
            {
                out.push((self.entries[start].time.date(), &self.entries[start..i]));
                start = i;
            }
        }
        out
    }

    /// Last tick price of each day.
    pub fn daily_closes(&self) -> Result<DailyPriceSeries> {
        DailyPriceSeries::new(
            self.by_day()
                .into_iter()
                .map(|(d, ticks)| (d, ticks[ticks.len() - 1].price))
                .collect(),
        )
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv_reader(reader);
        expect_header(&mut rdr, &["timestamp", "price"])?;
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let ts = field(&record, 0, line)?;
            let time = parse_timestamp(ts).ok_or_else(|| Error::Parse {
                line,
                message: format!("bad timestamp {ts:?}"),
            })?;
            let price = parse_f64(field(&record, 1, line)?, line)?;
            entries.push(Tick { time, price });
        }
        Self::new(entries)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "timestamp,price")?;
        for t in &self.entries {
            writeln!(w, "{},{}", t.time.format(TIMESTAMP_FORMAT), t.price)?;
        }
        Ok(())
    }
}

/// Rows of `date,<value>` with a fixed header.
pub(crate) fn read_dated_values<R: Read>(reader: R, value: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["date", value])?;
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let date = field(&record, 0, line)?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {date:?}: {e}"),
        })?;
        entries.push((date, parse_f64(field(&record, 1, line)?, line)?));
    }
    Ok(entries)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: headers.position().map_or(1, |p| p.line()),
            message: format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn field(record: &csv::StringRecord, i: usize, line: u64) -> Result<&str> {
    if record.len() != 2 {
        return Err(Error::Parse {
            line,
            message: format!("expected 2 fields, found {}", record.len()),
        });
    }
    record.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field {i}"),
    })
}

fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad number {s:?}: {e}"),
    })
}

pub(crate) fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn prices(values: &[f64]) -> DailyPriceSeries {
        let dates = SessionCalendar::tokyo().next_trading_days(SYNTHETIC_START, values.len());
        DailyPriceSeries::new(dates.into_iter().zip(values.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn parses_two_rows() {
        let csv = "date,close\n2006-06-05,2500.0\n2006-06-06,2525.1\n";
        let s = load_daily_prices(csv.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries()[1], (date(2006, 6, 6), 2525.1));
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let csv = "date,close\n2006-06-06,2525.1\n2006-06-05,2500.0\n";
        let s = load_daily_prices(csv.as_bytes()).unwrap();
        assert_eq!(s.entries()[0].0, date(2006, 6, 5));
    }

    #[test]
    fn negative_price_rejected() {
        let csv = "date,close\n2006-06-05,-1\n";
        assert!(matches!(load_daily_prices(csv.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_after_header_is_valid() {
        let s = load_daily_prices("date,close\n".as_bytes()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = "date,close\n2006-06-05,2500\n2006-06-06,abc\n";
        match load_daily_prices(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_date_rejected() {
        let csv = "date,close\n2006-06-05,2500\n2006-06-05,2501\n";
        assert!(matches!(load_daily_prices(csv.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            load_daily_prices("day,price\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comment_lines_skipped() {
        let csv = "# seed=7\ndate,close\n2006-06-05,2500\n";
        assert_eq!(load_daily_prices(csv.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn equal_prices_give_zero_return() {
        let r = daily_log_returns(&prices(&[100.0, 100.0])).unwrap();
        assert_eq!(r.values(), &[0.0]);
    }

    #[test]
    fn log_ratio_returns() {
        let r = daily_log_returns(&prices(&[100.0, 110.0])).unwrap();
        assert_abs_diff_eq!(r.values()[0], 0.09531, epsilon = 1e-5);

        let r = daily_log_returns(&prices(&[100.0, 110.0, 100.0])).unwrap();
        assert_abs_diff_eq!(r.values()[0], 0.09531, epsilon = 1e-5);
        assert_abs_diff_eq!(r.values()[1], -0.09531, epsilon = 1e-5);
        assert_eq!(r.values()[0], -r.values()[1]);
        assert_eq!(r.dates()[1], prices(&[1.0, 1.0, 1.0]).entries()[2].0);
    }

    #[test]
    fn short_series_is_insufficient() {
        assert!(matches!(
            daily_log_returns(&prices(&[100.0])),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn mean_is_cached_average() {
        let r = ReturnSeries::from_values(vec![0.01, -0.03, 0.05]).unwrap();
        assert_abs_diff_eq!(r.mean(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn tick_csv_round_trip() {
        let csv = "timestamp,price\n2006-06-05T09:00:00,2500\n2006-06-05T09:00:01,2501.5\n";
        let t = TickSeries::from_csv(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[]).unwrap();
        assert_eq!(TickSeries::from_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn decreasing_ticks_rejected() {
        let csv = "timestamp,price\n2006-06-05T09:00:01,2500\n2006-06-05T09:00:00,2501\n";
        assert!(matches!(TickSeries::from_csv(csv.as_bytes()), Err(Error::Validation(_))));
    }
}
