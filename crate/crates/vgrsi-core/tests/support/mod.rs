//! Shared acceptance-test machinery: deterministic data generators and an
//! independent transcription of the indicator arithmetic used as an oracle.
//!
//! Generators work on the 1/1024 dyadic lattice around 1024 so that every
//! price, price difference, and collinear segment evaluation is exactly
//! representable in an f64; geometric predicates then agree bit-for-bit
//! between any two correct implementations, which makes exact set and count
//! comparisons sound.

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vgrsi_core::marketdata::{Candle, InstrumentSpec, MarketData, Timeframe};
use vgrsi_core::Time;

pub fn t0() -> Time {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

/// Random walk on the dyadic lattice: steps of k/1024, k ∈ [-512, 512].
pub fn lattice_walk<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut units: i64 = 1024 * 1024;
    (0..len)
        .map(|_| {
            units += rng.gen_range(-512..=512);
            units as f64 / 1024.0
        })
        .collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Aggregation rule for the brute-force oracle.
#[derive(Debug, Clone, Copy)]
pub enum Agg {
    MeanOfRatios,
    RatioOfRatios,
}

/// Brute-force indicator components, computed without touching the library's
/// internals: visibility by cross-multiplied segment inequalities, the
/// nearest-first cap by sorting, degenerate ratios by native IEEE
/// infinity/NaN arithmetic.
pub struct BruteVgrsi {
    pub s_plus: f64,
    pub s_minus: f64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub value: Option<f64>,
}

pub fn brute_vgrsi(prices: &[f64], t: usize, w_s: usize, w_v: usize, agg: Agg) -> BruteVgrsi {
    assert!(w_s >= 1 && w_v >= 1 && t >= w_s && t < prices.len());
    let mut s_plus = 0.0;
    let mut s_minus = 0.0;
    let mut n_plus = 0u64;
    let mut n_minus = 0u64;
    for j in (t + 1 - w_s)..=t {
        let lo = j.saturating_sub(w_v);
        let mut vis: Vec<usize> = (lo..j)
            .filter(|&i| {
                (i + 1..j).all(|k| {
                    // p_k strictly below the i→j segment, cross-multiplied to
                    // avoid division: (p_k - p_i)(j - i) < (p_j - p_i)(k - i).
                    (prices[k] - prices[i]) * ((j - i) as f64)
                        < (prices[j] - prices[i]) * ((k - i) as f64)
                })
            })
            .collect();
        vis.sort_by_key(|&i| j - i);
        vis.truncate(w_s);
        for i in vis {
            if i == 0 {
                continue;
            }
            let dp = prices[i] - prices[i - 1];
            if dp > 0.0 {
                s_plus += dp;
                n_plus += 1;
            } else if dp < 0.0 {
                s_minus += -dp;
                n_minus += 1;
            }
        }
    }
    // IEEE semantics express the degenerate cases directly: x/0 = ∞ for
    // x > 0, 0/0 = NaN, ∞ saturates a mean, ∞/∞ = NaN, finite/∞ = 0.
    let r_s = s_plus / s_minus;
    let r_n = n_plus as f64 / n_minus as f64;
    let r_a = match agg {
        Agg::MeanOfRatios => (r_s + r_n) / 2.0,
        Agg::RatioOfRatios => r_s / r_n,
    };
    let value = if r_a.is_nan() {
        None
    } else {
        Some(100.0 - 100.0 / (1.0 + r_a))
    };
    BruteVgrsi {
        s_plus,
        s_minus,
        n_plus,
        n_minus,
        value,
    }
}

/// Synthetic instrument quoted around 1000 with 0.01 points: one lot of
/// margin budget 1000 at leverage 100 buys exactly ~1.00 lots.
pub fn instrument() -> InstrumentSpec {
    InstrumentSpec {
        symbol: "SYN".into(),
        point: 0.01,
        contract_size: 100.0,
        quote_currency: "USD".into(),
        commission_per_lot: 0.5,
        default_spread_points: 2,
    }
}

pub fn instrument_with_spread(points: u32) -> InstrumentSpec {
    InstrumentSpec {
        default_spread_points: points,
        ..instrument()
    }
}

/// Shape of the synthetic market: a flat noisy base with a deterministic
/// V-shaped dip event (linear decline, mirror recovery) every few hours.
/// Oversold readings near the dip bottom precede a guaranteed recovery, and
/// overbought fade readings at the dip start precede the decline, so the
/// pattern is exploitable from both sides via indicator thresholds.
#[derive(Debug, Clone, Copy)]
pub struct MarketShape {
    pub base: f64,
    pub dip_depth: f64,
    pub dip_minutes: i64,
    pub event_every_minutes: i64,
    pub noise: f64,
}

impl Default for MarketShape {
    fn default() -> Self {
        MarketShape {
            base: 1000.0,
            dip_depth: 2.0,
            dip_minutes: 30,
            event_every_minutes: 240,
            noise: 0.15,
        }
    }
}

pub fn dip_m1(seed: u64, days: i64, shape: MarketShape) -> Vec<Candle> {
    let mut rng = seeded(seed);
    let mut prev_close = shape.base;
    (0..days * 1440)
        .map(|i| {
            let phase = i % shape.event_every_minutes;
            let wave = if phase < shape.dip_minutes {
                -shape.dip_depth * phase as f64 / shape.dip_minutes as f64
            } else if phase < 2 * shape.dip_minutes {
                -shape.dip_depth * (2 * shape.dip_minutes - phase) as f64 / shape.dip_minutes as f64
            } else {
                0.0
            };
            let close = shape.base + wave + rng.gen_range(-shape.noise..=shape.noise);
            let wick = rng.gen_range(0.0..=shape.noise / 2.0);
            let open = prev_close;
            prev_close = close;
            Candle {
                open_time: t0() + Duration::minutes(i),
                timeframe: Timeframe::M1,
                open,
                high: open.max(close) + wick,
                low: open.min(close) - wick,
                close,
                volume: 1,
            }
        })
        .collect()
}

pub fn dip_data(seed: u64, days: i64, shape: MarketShape) -> MarketData {
    MarketData::from_m1(dip_m1(seed, days, shape)).unwrap()
}
