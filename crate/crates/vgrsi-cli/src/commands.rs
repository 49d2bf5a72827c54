//! Subcommand implementations: ingest → indicator → backtest →
//! walk-forward → report. Every output directory gets a `manifest.json`
//! recording the effective configuration, the data fingerprint, and the
//! seed, so any run can be replayed bit-exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vgrsi_core::broker::{simulate, TradeRecord};
use vgrsi_core::metrics::{aggregate, compute_window_stats, MinMaxMean, Summary, WindowStats};
use vgrsi_core::vgrsi::rolling_aligned;
use vgrsi_core::walkforward::{data_fingerprint, run as run_walkforward, RunManifest};
use vgrsi_core::{Error, Price, Time};

use crate::config::RunConfig;
use crate::outputs;

/// Dump the rolling indicator over one timeframe's closes as `vgrsi.csv`.
pub fn cmd_indicator(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<()> {
    let section = config.indicator()?;
    let params = section.params();
    params.validate()?;
    let data = config.load_market_data()?;
    let candles = data.get(section.timeframe);
    let closes: Vec<Price> = candles.iter().map(|c| c.close).collect();
    // A series shorter than the warm-up has no defined values at all.
    let values = match rolling_aligned(&closes, &params) {
        Ok(values) => values,
        Err(Error::SeriesTooShort { .. }) | Err(Error::EmptyInput(_)) => {
            vec![None; closes.len()]
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<(Time, Option<Price>)> = candles
        .iter()
        .zip(&values)
        .map(|(c, v)| (c.open_time, *v))
        .collect();
    outputs::write_indicator_csv(&out_dir.join("vgrsi.csv"), &rows)?;

    let defined = values.iter().filter(|v| v.is_some()).count();
    let manifest = serde_json::json!({
        "command": "indicator",
        "seed": seed,
        "instrument": config.instrument,
        "timeframe": section.timeframe,
        "params": params,
        "data_fingerprint": data_fingerprint(&data),
        "rows": rows.len(),
        "defined": defined,
        "undefined": rows.len() - defined,
    });
    outputs::write_json_pretty(&out_dir.join("manifest.json"), &manifest)?;
    println!(
        "vgrsi.csv: {} rows, {} defined, {} undefined",
        rows.len(),
        defined,
        rows.len() - defined
    );
    Ok(())
}

/// Simulate fixed strategy parameters over the whole dataset.
pub fn cmd_backtest(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<()> {
    let strategy = config.strategy()?;
    let data = config.load_market_data()?;
    let result = simulate(&data, &strategy, &config.instrument, &config.account, None)?;
    let stats = compute_window_stats(
        &result.trades,
        &result.equity_curve,
        result.initial_balance,
        config.annualize_sharpe,
    )?;

    outputs::write_trades_csv(&out_dir.join("trades.csv"), &result.trades)?;
    outputs::write_equity_csv(&out_dir.join("equity.csv"), &result.equity_curve)?;
    outputs::write_signals_jsonl(
        &out_dir.join("signals.jsonl"),
        &result.signals,
        strategy.buy_threshold,
        strategy.sell_threshold,
    )?;
    let block = outputs::BacktestStats {
        initial_balance: result.initial_balance,
        final_balance: result.final_balance,
        profit: result.profit(),
        trades_all: stats.trades_all,
        trades_long: stats.trades_long,
        trades_short: stats.trades_short,
        sharpe: stats.sharpe,
        max_drawdown_pct: stats.max_drawdown_pct,
        signals: result.signals.len() as u64,
        rejections: result.rejections.len() as u64,
        defined_evaluations: result.defined_evaluations,
    };
    outputs::write_json_pretty(&out_dir.join("stats.json"), &block)?;
    outputs::write_stats_csv(&out_dir.join("stats.csv"), &block)?;

    let manifest = serde_json::json!({
        "command": "backtest",
        "seed": seed,
        "instrument": config.instrument,
        "account": config.account,
        "annualize_sharpe": config.annualize_sharpe,
        "strategy": strategy,
        "data_fingerprint": data_fingerprint(&data),
    });
    outputs::write_json_pretty(&out_dir.join("manifest.json"), &manifest)?;
    println!(
        "trades: {} ({} long / {} short), profit: {:.2}, final balance: {:.2}",
        stats.trades_all,
        stats.trades_long,
        stats.trades_short,
        result.profit(),
        result.final_balance
    );
    Ok(())
}

/// Optimize per window, trade out-of-sample, and write the full protocol
/// artifacts.
pub fn cmd_walkforward(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let wf = config.walkforward()?;
    let data = config.load_market_data()?;
    let report = run_walkforward(&data, &wf, &config.instrument, &config.account)?;

    outputs::write_windows_csv(&out_dir.join("windows.csv"), &report.manifest.windows)?;
    outputs::write_cumulative_csv(&out_dir.join("cumulative.csv"), &report.cumulative_profit)?;
    let trades: Vec<(usize, TradeRecord)> = report
        .windows
        .iter()
        .flat_map(|w| w.trades.iter().map(|t| (w.summary.window, *t)))
        .collect();
    outputs::write_window_trades_csv(&out_dir.join("trades.csv"), &trades)?;
    outputs::write_json_pretty(&out_dir.join("manifest.json"), &report.manifest)?;

    let total = report
        .cumulative_profit
        .last()
        .map(|p| p.cumulative_profit)
        .unwrap_or(0.0);
    println!(
        "windows: {}, out-of-sample trades: {}, cumulative profit: {:.2}",
        report.windows.len(),
        trades.len(),
        total
    );
    Ok(())
}

/// Aggregate a walk-forward manifest into the cross-window summary table.
pub fn cmd_report(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let manifest_path = config
        .report
        .manifest
        .clone()
        .unwrap_or_else(|| out_dir.join("manifest.json"));
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .with_context(|| format!("parsing manifest {}", manifest_path.display()))?;

    let data = config.load_market_data()?;
    let fingerprint = data_fingerprint(&data);
    if fingerprint != manifest.data_fingerprint {
        bail!(
            "data fingerprint mismatch: configured data hashes to {fingerprint}, \
             manifest records {}",
            manifest.data_fingerprint
        );
    }

    let stats: Vec<WindowStats> = manifest.windows.iter().map(|w| w.stats).collect();
    let summary = aggregate(&stats, data.trading_days())?;
    outputs::write_summary_csv(&out_dir.join("summary.csv"), &summary)?;
    outputs::write_json_pretty(&out_dir.join("summary.json"), &summary)?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(s: &Summary) {
    let mmm = |m: &MinMaxMean| format!("min {} / max {} / mean {:.2}", m.min, m.max, m.mean);
    println!("windows:             {}", s.windows);
    println!("trades (all):        {}", mmm(&s.trades_all));
    println!("trades (long):       {}", mmm(&s.trades_long));
    println!("trades (short):      {}", mmm(&s.trades_short));
    println!("total trades:        {}", s.total_trades);
    match s.mean_sharpe {
        Some(v) => println!("mean sharpe:         {v:.3}"),
        None => println!("mean sharpe:         undefined"),
    }
    println!("mean max drawdown:   {:.2}%", s.mean_max_drawdown_pct);
    println!("total profit:        {:.2}", s.total_profit);
    println!("trading days:        {}", s.trading_days);
    println!("trades per day:      {:.3}", s.trades_per_day);
    println!("profit per day:      {:.2}", s.profit_per_day);
}
