//! Artifact writers. All output is single-threaded and deterministic:
//! floats print shortest-roundtrip, timestamps print RFC 3339 UTC, so a
//! rerun produces byte-identical files.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use vgrsi_core::broker::{EquitySample, TradeRecord};
use vgrsi_core::marketdata::fmt_time;
use vgrsi_core::metrics::Summary;
use vgrsi_core::signals::Signal;
use vgrsi_core::walkforward::{CumulativePoint, WindowSummary};
use vgrsi_core::{Price, Time};

fn num(v: Price) -> String {
    format!("{v}")
}

fn opt_num(v: Option<Price>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json_pretty(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_string(path, &text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

/// `timestamp,value` with an empty value field where the indicator is
/// undefined.
pub fn write_indicator_csv(path: &Path, rows: &[(Time, Option<Price>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "value"])?;
    for (time, value) in rows {
        w.write_record([fmt_time(*time), opt_num(*value)])?;
    }
    w.flush()?;
    Ok(())
}

const TRADE_COLUMNS: [&str; 11] = [
    "open_time",
    "close_time",
    "direction",
    "lots",
    "entry",
    "exit",
    "sl",
    "tp",
    "reason",
    "commission",
    "pnl",
];

fn trade_fields(t: &TradeRecord) -> [String; 11] {
    [
        fmt_time(t.open_time),
        fmt_time(t.exit_time),
        t.direction.to_string(),
        num(t.volume_lots),
        num(t.entry_price),
        num(t.exit_price),
        num(t.sl_price),
        num(t.tp_price),
        t.exit_reason.to_string(),
        num(t.commission_paid),
        num(t.realized_pnl),
    ]
}

pub fn write_trades_csv(path: &Path, trades: &[TradeRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRADE_COLUMNS)?;
    for t in trades {
        w.write_record(trade_fields(t))?;
    }
    w.flush()?;
    Ok(())
}

/// Trade log with a leading `window` column for walk-forward runs.
pub fn write_window_trades_csv(path: &Path, trades: &[(usize, TradeRecord)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["window"];
    header.extend(TRADE_COLUMNS);
    w.write_record(&header)?;
    for (window, t) in trades {
        let mut fields = vec![window.to_string()];
        fields.extend(trade_fields(t));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_equity_csv(path: &Path, curve: &[EquitySample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "balance", "equity"])?;
    for s in curve {
        w.write_record([fmt_time(s.time), num(s.balance), num(s.equity)])?;
    }
    w.flush()?;
    Ok(())
}

/// Audit log: one JSON object per entry signal, including the thresholds in
/// force and the per-timeframe indicator snapshot.
pub fn write_signals_jsonl(
    path: &Path,
    signals: &[Signal],
    buy_threshold: Price,
    sell_threshold: Price,
) -> Result<()> {
    let mut out = String::new();
    for s in signals {
        let record = serde_json::json!({
            "time": fmt_time(s.time),
            "direction": s.direction,
            "buy_threshold": buy_threshold,
            "sell_threshold": sell_threshold,
            "snapshot": s.snapshot,
            "sl_distance_points": s.sl_distance_points,
            "tp_distance_points": s.tp_distance_points,
        });
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    write_string(path, &out)
}

/// Fixed-parameter simulation stats: the JSON block and the one-row CSV
/// share this shape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BacktestStats {
    pub initial_balance: Price,
    pub final_balance: Price,
    pub profit: Price,
    pub trades_all: u64,
    pub trades_long: u64,
    pub trades_short: u64,
    /// `null`/empty when undefined (fewer than two daily closes or zero
    /// variance); never coerced to a number.
    pub sharpe: Option<Price>,
    pub max_drawdown_pct: Price,
    pub signals: u64,
    pub rejections: u64,
    pub defined_evaluations: u64,
}

pub fn write_stats_csv(path: &Path, stats: &BacktestStats) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "initial_balance",
        "final_balance",
        "profit",
        "trades_all",
        "trades_long",
        "trades_short",
        "sharpe",
        "max_drawdown_pct",
        "signals",
        "rejections",
        "defined_evaluations",
    ])?;
    w.write_record([
        num(stats.initial_balance),
        num(stats.final_balance),
        num(stats.profit),
        stats.trades_all.to_string(),
        stats.trades_long.to_string(),
        stats.trades_short.to_string(),
        opt_num(stats.sharpe),
        num(stats.max_drawdown_pct),
        stats.signals.to_string(),
        stats.rejections.to_string(),
        stats.defined_evaluations.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-window results: the chosen parameters and the out-of-sample stats.
pub fn write_windows_csv(path: &Path, windows: &[WindowSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "window",
        "train_start",
        "train_end",
        "trade_start",
        "trade_end",
        "m1_window_size",
        "m1_window_visibility",
        "m1_variant",
        "m5_window_size",
        "m5_window_visibility",
        "m5_variant",
        "m30_window_size",
        "m30_window_visibility",
        "m30_variant",
        "buy_threshold",
        "sell_threshold",
        "sl_tp_lookback",
        "sl_tp_multiplier",
        "in_sample_profit",
        "profit",
        "trades_all",
        "trades_long",
        "trades_short",
        "sharpe",
        "max_drawdown_pct",
    ])?;
    for win in windows {
        let p = &win.params;
        w.write_record([
            win.window.to_string(),
            fmt_time(win.train_start),
            fmt_time(win.train_end),
            fmt_time(win.trade_start),
            fmt_time(win.trade_end),
            p.vgrsi.m1.window_size.to_string(),
            p.vgrsi.m1.window_visibility.to_string(),
            p.vgrsi.m1.variant.to_string(),
            p.vgrsi.m5.window_size.to_string(),
            p.vgrsi.m5.window_visibility.to_string(),
            p.vgrsi.m5.variant.to_string(),
            p.vgrsi.m30.window_size.to_string(),
            p.vgrsi.m30.window_visibility.to_string(),
            p.vgrsi.m30.variant.to_string(),
            num(p.buy_threshold),
            num(p.sell_threshold),
            p.sl_tp_lookback.to_string(),
            num(p.sl_tp_multiplier),
            num(win.in_sample_profit),
            num(win.stats.profit),
            win.stats.trades_all.to_string(),
            win.stats.trades_long.to_string(),
            win.stats.trades_short.to_string(),
            opt_num(win.stats.sharpe),
            num(win.stats.max_drawdown_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cumulative_csv(path: &Path, points: &[CumulativePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["window", "time", "cumulative_profit"])?;
    for p in points {
        w.write_record([
            p.window.to_string(),
            fmt_time(p.time),
            num(p.cumulative_profit),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cross-window summary mirroring the reporting table.
pub fn write_summary_csv(path: &Path, s: &Summary) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "windows",
        "trades_all_min",
        "trades_all_max",
        "trades_all_mean",
        "trades_long_min",
        "trades_long_max",
        "trades_long_mean",
        "trades_short_min",
        "trades_short_max",
        "trades_short_mean",
        "total_trades",
        "mean_sharpe",
        "mean_max_drawdown_pct",
        "total_profit",
        "trading_days",
        "trades_per_day",
        "profit_per_day",
    ])?;
    w.write_record([
        s.windows.to_string(),
        num(s.trades_all.min),
        num(s.trades_all.max),
        num(s.trades_all.mean),
        num(s.trades_long.min),
        num(s.trades_long.max),
        num(s.trades_long.mean),
        num(s.trades_short.min),
        num(s.trades_short.max),
        num(s.trades_short.mean),
        s.total_trades.to_string(),
        opt_num(s.mean_sharpe),
        num(s.mean_max_drawdown_pct),
        num(s.total_profit),
        s.trading_days.to_string(),
        num(s.trades_per_day),
        num(s.profit_per_day),
    ])?;
    w.flush()?;
    Ok(())
}
