//! OHLCV ingestion, instrument conventions, and timeframe resampling.
//!
//! Input CSV schema is fixed as `timestamp,open,high,low,close,volume` with
//! ISO-8601 UTC timestamps. Resampling windows are anchored at midnight UTC.
//! Market gaps (weekends, holidays) are never filled: everything downstream
//! operates on bar index, not wall-clock.

use std::fmt;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Price, Time};

/// Bar durations the harness understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Timeframe {
    M1,
    M5,
    M30,
}

impl Timeframe {
    pub fn minutes(self) -> i64 {
        match self {
            Timeframe::M1 => 1,
            Timeframe::M5 => 5,
            Timeframe::M30 => 30,
        }
    }

    pub fn duration(self) -> Duration {
        Duration::minutes(self.minutes())
    }
}

impl fmt::Display for Timeframe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Timeframe::M1 => "M1",
            Timeframe::M5 => "M5",
            Timeframe::M30 => "M30",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Timeframe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Timeframe::M1),
            "M5" => Ok(Timeframe::M5),
            "M30" => Ok(Timeframe::M30),
            other => Err(Error::Config(format!("unknown timeframe `{other}`"))),
        }
    }
}

/// One value per supported timeframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerTimeframe<T> {
    pub m1: T,
    pub m5: T,
    pub m30: T,
}

impl<T> PerTimeframe<T> {
    pub fn new(m1: T, m5: T, m30: T) -> Self {
        PerTimeframe { m1, m5, m30 }
    }

    pub fn uniform(value: T) -> Self
    where
        T: Clone,
    {
        PerTimeframe {
            m1: value.clone(),
            m5: value.clone(),
            m30: value,
        }
    }

    pub fn get(&self, tf: Timeframe) -> &T {
        match tf {
            Timeframe::M1 => &self.m1,
            Timeframe::M5 => &self.m5,
            Timeframe::M30 => &self.m30,
        }
    }

    pub fn get_mut(&mut self, tf: Timeframe) -> &mut T {
        match tf {
            Timeframe::M1 => &mut self.m1,
            Timeframe::M5 => &mut self.m5,
            Timeframe::M30 => &mut self.m30,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Timeframe, &T) -> U) -> PerTimeframe<U> {
        PerTimeframe {
            m1: f(Timeframe::M1, &self.m1),
            m5: f(Timeframe::M5, &self.m5),
            m30: f(Timeframe::M30, &self.m30),
        }
    }
}

pub const TIMEFRAMES: [Timeframe; 3] = [Timeframe::M1, Timeframe::M5, Timeframe::M30];

/// Contract conventions of one instrument.
///
/// The spread model is a constant spread in points applied symmetrically
/// around the (mid) close: `ask = close + spread/2 * point`,
/// `bid = close - spread/2 * point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSpec {
    pub symbol: String,
    /// Price units per point, e.g. 0.00001 for EUR/USD quoted to 5 digits.
    pub point: Price,
    /// Units per lot, e.g. 100_000 for EUR/USD.
    pub contract_size: Price,
    pub quote_currency: String,
    /// Account currency per lot per side.
    pub commission_per_lot: Price,
    pub default_spread_points: u32,
}

impl InstrumentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.point > 0.0) {
            return Err(Error::Config(format!(
                "instrument {}: point must be > 0",
                self.symbol
            )));
        }
        if !(self.contract_size > 0.0) {
            return Err(Error::Config(format!(
                "instrument {}: contract_size must be > 0",
                self.symbol
            )));
        }
        if self.commission_per_lot < 0.0 {
            return Err(Error::Config(format!(
                "instrument {}: commission_per_lot must be >= 0",
                self.symbol
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: InstrumentSpec =
            toml::from_str(s).map_err(|e| Error::Config(format!("instrument spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn half_spread(&self) -> Price {
        self.default_spread_points as Price / 2.0 * self.point
    }

    /// Ask quote derived from a mid price.
    pub fn ask(&self, mid: Price) -> Price {
        mid + self.half_spread()
    }

    /// Bid quote derived from a mid price.
    pub fn bid(&self, mid: Price) -> Price {
        mid - self.half_spread()
    }

    /// Convert a price distance to points.
    pub fn to_points(&self, price_delta: Price) -> Price {
        price_delta / self.point
    }

    /// Convert a whole-point distance to a price distance.
    pub fn from_points(&self, points: i64) -> Price {
        points as Price * self.point
    }
}

/// Which close the indicator series is built from. Mid is the default; the
/// bid/ask variants shift the close by half the configured spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceBasis {
    #[default]
    Mid,
    Bid,
    Ask,
}

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub open_time: Time,
    pub timeframe: Timeframe,
    pub open: Price,
    pub high: Price,
    pub low: Price,
    pub close: Price,
    pub volume: u64,
}

impl Candle {
    pub fn close_time(&self) -> Time {
        self.open_time + self.timeframe.duration()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.low <= self.open.min(self.close)
            && self.high >= self.open.max(self.close)
            && self.low <= self.high
            && [self.open, self.high, self.low, self.close]
                .iter()
                .all(|p| p.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Validation {
                line: None,
                msg: format!("OHLC invariant violated at {}", fmt_time(self.open_time)),
            })
        }
    }
}

/// Close prices of one timeframe with their timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    prices: Vec<Price>,
    timestamps: Vec<Time>,
    timeframe: Timeframe,
}

impl PriceSeries {
    pub fn new(prices: Vec<Price>, timestamps: Vec<Time>, timeframe: Timeframe) -> Result<Self> {
        if prices.len() != timestamps.len() {
            return Err(Error::InvalidParams(
                "prices and timestamps must have equal length".into(),
            ));
        }
        if prices.is_empty() {
            return Err(Error::EmptyInput("price series"));
        }
        if !prices.iter().all(|p| p.is_finite() && *p > 0.0) {
            return Err(Error::Validation {
                line: None,
                msg: "prices must be finite and positive".into(),
            });
        }
        if !timestamps.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation {
                line: None,
                msg: "timestamps must be strictly increasing".into(),
            });
        }
        Ok(PriceSeries {
            prices,
            timestamps,
            timeframe,
        })
    }

    pub fn prices(&self) -> &[Price] {
        &self.prices
    }

    pub fn timestamps(&self) -> &[Time] {
        &self.timestamps
    }

    pub fn timeframe(&self) -> Timeframe {
        self.timeframe
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

pub fn fmt_time(t: Time) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_time(s: &str) -> std::result::Result<Time, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| format!("bad timestamp `{s}`: {e}"))
}

const CSV_HEADER: &str = "timestamp,open,high,low,close,volume";

/// Load candles from a CSV file, validating every row.
///
/// Rows may arrive unsorted; they are sorted by timestamp. Duplicate
/// timestamps are rejected, gaps are preserved.
pub fn load_csv(
    path: impl AsRef<Path>,
    spec: &InstrumentSpec,
    timeframe: Timeframe,
) -> Result<Vec<Candle>> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::CsvParse {
                line: 0,
                msg: format!("{other:?}"),
            },
        })?;

    let mut candles = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::CsvParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |msg: String| Error::CsvParse { line, msg };

        if record.len() != 6 {
            return Err(parse_err(format!(
                "expected 6 fields ({CSV_HEADER}), got {}",
                record.len()
            )));
        }
        let open_time = parse_time(record[0].trim()).map_err(&parse_err)?;
        let field = |idx: usize, name: &str| -> Result<Price> {
            record[idx]
                .trim()
                .parse::<Price>()
                .map_err(|e| parse_err(format!("bad {name} `{}`: {e}", &record[idx])))
        };
        let open = field(1, "open")?;
        let high = field(2, "high")?;
        let low = field(3, "low")?;
        let close = field(4, "close")?;
        let volume = record[5]
            .trim()
            .parse::<u64>()
            .map_err(|e| parse_err(format!("bad volume `{}`: {e}", &record[5])))?;

        let candle = Candle {
            open_time,
            timeframe,
            open,
            high,
            low,
            close,
            volume,
        };
        candle.validate().map_err(|_| Error::Validation {
            line: Some(line),
            msg: format!("OHLC invariant violated (o={open} h={high} l={low} c={close})"),
        })?;
        candles.push((line, candle));
    }

    candles.sort_by_key(|(_, c)| c.open_time);
    for pair in candles.windows(2) {
        if pair[0].1.open_time == pair[1].1.open_time {
            return Err(Error::DuplicateTimestamp {
                line: pair[1].0,
                timestamp: fmt_time(pair[1].1.open_time),
            });
        }
    }
    Ok(candles.into_iter().map(|(_, c)| c).collect())
}

/// Write candles in the same schema `load_csv` reads. Floats use the shortest
/// representation that parses back to the identical value.
pub fn write_csv(path: impl AsRef<Path>, candles: &[Candle]) -> Result<()> {
    let mut out = String::with_capacity(candles.len() * 48 + 32);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in candles {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_time(c.open_time),
            c.open,
            c.high,
            c.low,
            c.close,
            c.volume
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn window_start(t: Time, target: Timeframe) -> Time {
    let secs = target.minutes() * 60;
    let ts = t.timestamp();
    Utc.timestamp_opt(ts - ts.rem_euclid(secs), 0).unwrap()
}

/// Aggregate M1 candles into `target` bars on windows anchored at midnight UTC.
///
/// A window is emitted when later data exists (it can no longer grow) or when
/// its final minute slot is present; an incomplete trailing window is emitted
/// only with `include_partial`.
pub fn resample(
    candles: &[Candle],
    target: Timeframe,
    include_partial: bool,
) -> Result<Vec<Candle>> {
    if target == Timeframe::M1 {
        return Err(Error::InvalidParams(
            "resample target must be M5 or M30".into(),
        ));
    }
    if let Some(c) = candles.iter().find(|c| c.timeframe != Timeframe::M1) {
        return Err(Error::Validation {
            line: None,
            msg: format!("resample input must be M1, found {} bar", c.timeframe),
        });
    }
    if !candles.windows(2).all(|w| w[0].open_time < w[1].open_time) {
        return Err(Error::Validation {
            line: None,
            msg: "resample input must be sorted with unique timestamps".into(),
        });
    }

    let mut out = Vec::new();
    let mut group: Vec<&Candle> = Vec::new();
    let mut current_start: Option<Time> = None;

    let flush = |group: &mut Vec<&Candle>, start: Time, out: &mut Vec<Candle>| {
        let first = group.first().unwrap();
        let last = group.last().unwrap();
        out.push(Candle {
            open_time: start,
            timeframe: target,
            open: first.open,
            high: group.iter().map(|c| c.high).fold(Price::MIN, Price::max),
            low: group.iter().map(|c| c.low).fold(Price::MAX, Price::min),
            close: last.close,
            volume: group.iter().map(|c| c.volume).sum(),
        });
        group.clear();
    };

    for c in candles {
        let start = window_start(c.open_time, target);
        match current_start {
            Some(s) if s == start => group.push(c),
            Some(s) => {
                // Later data exists, so the open window is final.
                flush(&mut group, s, &mut out);
                current_start = Some(start);
                group.push(c);
            }
            None => {
                current_start = Some(start);
                group.push(c);
            }
        }
    }
    if let Some(s) = current_start {
        let last_slot = s + target.duration() - Duration::minutes(1);
        let closed = group.iter().any(|c| c.open_time == last_slot);
        if closed || include_partial {
            flush(&mut group, s, &mut out);
        }
    }
    Ok(out)
}

/// Project candles onto their mid closes.
pub fn close_series(candles: &[Candle]) -> Result<PriceSeries> {
    if candles.is_empty() {
        return Err(Error::EmptyInput("close_series"));
    }
    PriceSeries::new(
        candles.iter().map(|c| c.close).collect(),
        candles.iter().map(|c| c.open_time).collect(),
        candles[0].timeframe,
    )
}

/// Like [`close_series`] but shifted from mid to bid/ask closes via the
/// instrument's spread model.
pub fn close_series_with_basis(
    candles: &[Candle],
    spec: &InstrumentSpec,
    basis: PriceBasis,
) -> Result<PriceSeries> {
    if candles.is_empty() {
        return Err(Error::EmptyInput("close_series"));
    }
    let shift = match basis {
        PriceBasis::Mid => 0.0,
        PriceBasis::Bid => -spec.half_spread(),
        PriceBasis::Ask => spec.half_spread(),
    };
    PriceSeries::new(
        candles.iter().map(|c| c.close + shift).collect(),
        candles.iter().map(|c| c.open_time).collect(),
        candles[0].timeframe,
    )
}

/// The three candle streams a simulation runs on. Read-only after
/// construction and safe to share across parallel workers.
#[derive(Debug, Clone)]
pub struct MarketData {
    m1: Vec<Candle>,
    m5: Vec<Candle>,
    m30: Vec<Candle>,
}

impl MarketData {
    /// Build M5 and M30 by resampling the M1 stream (complete windows only).
    pub fn from_m1(m1: Vec<Candle>) -> Result<Self> {
        if m1.is_empty() {
            return Err(Error::EmptyInput("market data"));
        }
        let m5 = resample(&m1, Timeframe::M5, false)?;
        let m30 = resample(&m1, Timeframe::M30, false)?;
        Ok(MarketData { m1, m5, m30 })
    }

    /// Use explicitly supplied higher-timeframe series instead of resampling.
    pub fn with_series(m1: Vec<Candle>, m5: Vec<Candle>, m30: Vec<Candle>) -> Result<Self> {
        if m1.is_empty() {
            return Err(Error::EmptyInput("market data"));
        }
        for (series, tf) in [(&m5, Timeframe::M5), (&m30, Timeframe::M30)] {
            if series.iter().any(|c| c.timeframe != tf) {
                return Err(Error::Validation {
                    line: None,
                    msg: format!("expected {tf} candles"),
                });
            }
        }
        Ok(MarketData { m1, m5, m30 })
    }

    pub fn get(&self, tf: Timeframe) -> &[Candle] {
        match tf {
            Timeframe::M1 => &self.m1,
            Timeframe::M5 => &self.m5,
            Timeframe::M30 => &self.m30,
        }
    }

    pub fn m1(&self) -> &[Candle] {
        &self.m1
    }

    /// Keep only bars fully completed by `end` on every timeframe.
    pub fn slice_until(&self, end: Time) -> MarketData {
        let cut = |candles: &[Candle]| {
            candles
                .iter()
                .filter(|c| c.close_time() <= end)
                .cloned()
                .collect::<Vec<_>>()
        };
        MarketData {
            m1: cut(&self.m1),
            m5: cut(&self.m5),
            m30: cut(&self.m30),
        }
    }

    /// First M1 bar label.
    pub fn start_time(&self) -> Time {
        self.m1[0].open_time
    }

    /// Completion instant of the last M1 bar.
    pub fn end_time(&self) -> Time {
        self.m1.last().unwrap().close_time()
    }

    /// Number of distinct UTC dates with at least one M1 bar.
    pub fn trading_days(&self) -> u64 {
        let mut days = 0;
        let mut last = None;
        for c in &self.m1 {
            let d = c.open_time.date_naive();
            if last != Some(d) {
                days += 1;
                last = Some(d);
            }
        }
        days
    }
}
