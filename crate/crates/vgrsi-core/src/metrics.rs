//! Risk and activity statistics over trade logs and equity curves: maximum
//! drawdown relative to the fixed initial portfolio, Sharpe ratio from daily
//! equity closes, and min/max/mean aggregation across walk-forward windows.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::broker::{EquitySample, TradeRecord};
use crate::error::{Error, Result};
use crate::signals::Direction;
use crate::Price;

/// Largest peak-to-trough equity decline, as a percent of `base` (the fixed
/// initial portfolio, not the running peak).
pub fn max_drawdown(equity: &[Price], base: Price) -> Result<Price> {
    if equity.is_empty() {
        return Err(Error::EmptyInput("equity curve"));
    }
    if !(base > 0.0) {
        return Err(Error::InvalidParams("drawdown base must be > 0".into()));
    }
    let mut peak = equity[0];
    let mut worst: Price = 0.0;
    for &e in equity {
        peak = peak.max(e);
        worst = worst.max(peak - e);
    }
    Ok(worst / base * 100.0)
}

/// Sharpe ratio of daily equity closes: mean of simple daily returns over
/// their sample standard deviation, risk-free rate zero, `√252`-annualized
/// unless `annualize` is off. `None` when undefined: fewer than 2 samples,
/// zero variance, or non-positive equity.
pub fn sharpe(daily_equity: &[Price], annualize: bool) -> Option<Price> {
    if daily_equity.len() < 2 || daily_equity.iter().any(|e| *e <= 0.0) {
        return None;
    }
    let returns: Vec<Price> = daily_equity.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let n = returns.len() as Price;
    let mean = returns.iter().sum::<Price>() / n;
    if returns.len() < 2 {
        return None;
    }
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<Price>() / (n - 1.0);
    if var <= 0.0 {
        return None;
    }
    let raw = mean / var.sqrt();
    Some(if annualize {
        raw * (252.0 as Price).sqrt()
    } else {
        raw
    })
}

/// Last equity value of each UTC date, in date order.
pub fn daily_closes(samples: &[EquitySample]) -> Vec<Price> {
    let mut out: Vec<(NaiveDate, Price)> = Vec::new();
    for s in samples {
        let date = s.time.date_naive();
        match out.last_mut() {
            Some((d, e)) if *d == date => *e = s.equity,
            _ => out.push((date, s.equity)),
        }
    }
    out.into_iter().map(|(_, e)| e).collect()
}

/// Per-window statistics, the row unit of the aggregate summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub trades_all: u64,
    pub trades_long: u64,
    pub trades_short: u64,
    pub profit: Price,
    pub sharpe: Option<Price>,
    pub max_drawdown_pct: Price,
}

/// Statistics of one simulated window from its trade log and equity curve.
/// `base` is the fixed drawdown denominator (the initial portfolio).
pub fn compute_window_stats(
    trades: &[TradeRecord],
    equity: &[EquitySample],
    base: Price,
    annualize: bool,
) -> Result<WindowStats> {
    let curve: Vec<Price> = equity.iter().map(|s| s.equity).collect();
    let trades_long = trades
        .iter()
        .filter(|t| t.direction == Direction::Long)
        .count() as u64;
    // A window with no bars at all has no drawdown to speak of.
    let max_drawdown_pct = if curve.is_empty() {
        0.0
    } else {
        max_drawdown(&curve, base)?
    };
    Ok(WindowStats {
        trades_all: trades.len() as u64,
        trades_long,
        trades_short: trades.len() as u64 - trades_long,
        profit: trades.iter().map(|t| t.realized_pnl).sum(),
        sharpe: sharpe(&daily_closes(equity), annualize),
        max_drawdown_pct,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxMean {
    pub min: Price,
    pub max: Price,
    pub mean: Price,
}

impl MinMaxMean {
    fn over(values: impl Iterator<Item = Price> + Clone) -> Option<Self> {
        let mut count = 0usize;
        let mut sum = 0.0;
        let mut min = Price::INFINITY;
        let mut max = Price::NEG_INFINITY;
        for v in values {
            count += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (count > 0).then(|| MinMaxMean {
            min,
            max,
            mean: sum / count as Price,
        })
    }
}

/// Cross-window summary mirroring the reporting table: min/max/mean activity,
/// mean risk figures, totals, and per-day rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub windows: u64,
    pub trades_all: MinMaxMean,
    pub trades_long: MinMaxMean,
    pub trades_short: MinMaxMean,
    pub total_trades: u64,
    /// Mean over windows where the Sharpe ratio is defined; `None` if none.
    pub mean_sharpe: Option<Price>,
    pub mean_max_drawdown_pct: Price,
    pub total_profit: Price,
    pub trading_days: u64,
    pub trades_per_day: Price,
    pub profit_per_day: Price,
}

/// Aggregate window statistics. `trading_days` is the number of distinct
/// calendar dates with at least one bar in the traded data.
pub fn aggregate(stats: &[WindowStats], trading_days: u64) -> Result<Summary> {
    if stats.is_empty() {
        return Err(Error::EmptyInput("window statistics"));
    }
    if trading_days == 0 {
        return Err(Error::InvalidParams("trading_days must be >= 1".into()));
    }
    let counts = |f: fn(&WindowStats) -> u64| {
        MinMaxMean::over(stats.iter().map(move |s| f(s) as Price)).unwrap()
    };
    let total_trades: u64 = stats.iter().map(|s| s.trades_all).sum();
    let total_profit: Price = stats.iter().map(|s| s.profit).sum();
    let defined: Vec<Price> = stats.iter().filter_map(|s| s.sharpe).collect();
    Ok(Summary {
        windows: stats.len() as u64,
        trades_all: counts(|s| s.trades_all),
        trades_long: counts(|s| s.trades_long),
        trades_short: counts(|s| s.trades_short),
        total_trades,
        mean_sharpe: (!defined.is_empty())
            .then(|| defined.iter().sum::<Price>() / defined.len() as Price),
        mean_max_drawdown_pct: stats.iter().map(|s| s.max_drawdown_pct).sum::<Price>()
            / stats.len() as Price,
        total_profit,
        trading_days,
        trades_per_day: total_trades as Price / trading_days as Price,
        profit_per_day: total_profit / trading_days as Price,
    })
}
