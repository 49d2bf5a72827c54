//! Rolling train/trade protocol: optimize strategy parameters on a 30-day
//! window by in-sample profit, trade the winner on the following 7 days,
//! shift by 7 days, repeat. Windows are calendar-day aligned from the
//! midnight (UTC) preceding the first bar. Every trade window gets a fresh
//! account; the cumulative profit series sums out-of-sample profits across
//! windows.

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::broker::{
    simulate, AccountConfig, EquitySample, RejectedOrder, TradeRecord, TradeWindow,
};
use crate::error::{Error, Result};
use crate::marketdata::{fmt_time, InstrumentSpec, MarketData, PerTimeframe, TIMEFRAMES};
use crate::metrics::{compute_window_stats, WindowStats};
use crate::signals::{CrossDirection, Signal, StrategyParams};
use crate::vgrsi::{Variant, VgrsiParams};
use crate::{Price, Time};

/// Inclusive integer range with a grid step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
    /// Grid-mode stride; random mode draws uniformly from `[min, max]`.
    pub step: u64,
}

impl IntRange {
    const fn new(min: u64, max: u64, step: u64) -> Self {
        IntRange { min, max, step }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min == 0 || self.max < self.min || self.step == 0 {
            return Err(Error::Config(format!(
                "search range {name}: need 1 <= min <= max and step >= 1"
            )));
        }
        Ok(())
    }

    fn grid_count(&self) -> u64 {
        (self.max - self.min) / self.step + 1
    }

    fn grid_value(&self, i: u64) -> u64 {
        self.min + i * self.step
    }
}

/// Inclusive float range with a grid step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatRange {
    pub min: f64,
    pub max: f64,
    /// Grid-mode stride; random mode draws uniformly from `[min, max]`.
    pub step: f64,
}

impl FloatRange {
    const fn new(min: f64, max: f64, step: f64) -> Self {
        FloatRange { min, max, step }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max >= self.min && self.step > 0.0) {
            return Err(Error::Config(format!(
                "search range {name}: need finite min <= max and step > 0"
            )));
        }
        Ok(())
    }

    fn grid_count(&self) -> u64 {
        ((self.max - self.min) / self.step + 1e-9) as u64 + 1
    }

    fn grid_value(&self, i: u64) -> f64 {
        self.min + i as f64 * self.step
    }
}

/// Candidate ranges for every searched parameter. Grid mode walks the
/// strided grids; random mode samples the ranges uniformly (integers for
/// window sizes, lookback, and multiplier; reals for thresholds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    #[serde(default = "SearchSpace::default_window")]
    pub window_size: IntRange,
    #[serde(default = "SearchSpace::default_window")]
    pub window_visibility: IntRange,
    #[serde(default = "SearchSpace::default_buy")]
    pub buy_threshold: FloatRange,
    #[serde(default = "SearchSpace::default_sell")]
    pub sell_threshold: FloatRange,
    #[serde(default = "SearchSpace::default_lookback")]
    pub sl_tp_lookback: IntRange,
    #[serde(default = "SearchSpace::default_multiplier")]
    pub sl_tp_multiplier: IntRange,
    #[serde(default = "SearchSpace::default_variants")]
    pub variants: Vec<Variant>,
}

impl SearchSpace {
    fn default_window() -> IntRange {
        IntRange::new(10, 200, 10)
    }

    fn default_buy() -> FloatRange {
        FloatRange::new(20.0, 35.0, 5.0)
    }

    fn default_sell() -> FloatRange {
        FloatRange::new(70.0, 95.0, 5.0)
    }

    fn default_lookback() -> IntRange {
        IntRange::new(10, 100, 10)
    }

    fn default_multiplier() -> IntRange {
        IntRange::new(1, 10, 1)
    }

    fn default_variants() -> Vec<Variant> {
        vec![Variant::A0, Variant::A1]
    }

    pub fn validate(&self) -> Result<()> {
        self.window_size.validate("window_size")?;
        self.window_visibility.validate("window_visibility")?;
        self.buy_threshold.validate("buy_threshold")?;
        self.sell_threshold.validate("sell_threshold")?;
        self.sl_tp_lookback.validate("sl_tp_lookback")?;
        self.sl_tp_multiplier.validate("sl_tp_multiplier")?;
        if self.variants.is_empty() {
            return Err(Error::Config(
                "search space needs at least one variant".into(),
            ));
        }
        if !(self.buy_threshold.max < self.sell_threshold.min) {
            return Err(Error::Config(
                "buy_threshold range must lie entirely below sell_threshold range".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            window_size: Self::default_window(),
            window_visibility: Self::default_window(),
            buy_threshold: Self::default_buy(),
            sell_threshold: Self::default_sell(),
            sl_tp_lookback: Self::default_lookback(),
            sl_tp_multiplier: Self::default_multiplier(),
            variants: Self::default_variants(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Grid,
    Random,
}

fn default_train_days() -> u32 {
    30
}

fn default_trade_days() -> u32 {
    7
}

fn default_search() -> SearchMode {
    SearchMode::Random
}

fn default_budget() -> usize {
    64
}

fn default_true() -> bool {
    true
}

fn default_gap_minutes() -> i64 {
    30
}

fn default_max_open() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardConfig {
    #[serde(default = "default_train_days")]
    pub train_days: u32,
    #[serde(default = "default_trade_days")]
    pub trade_days: u32,
    /// Equal to `trade_days` for contiguous non-overlapping trade windows.
    #[serde(default = "default_trade_days")]
    pub step_days: u32,
    #[serde(default = "default_search")]
    pub search: SearchMode,
    /// Candidate evaluations per window. Grid mode exceeding the budget is
    /// thinned by even striding over the enumeration.
    #[serde(default = "default_budget")]
    pub search_budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub annualize_sharpe: bool,
    #[serde(default = "default_gap_minutes")]
    pub min_entry_gap_minutes: i64,
    #[serde(default = "default_max_open")]
    pub max_open_positions: usize,
    #[serde(default)]
    pub short_cross_direction: CrossDirection,
    #[serde(default)]
    pub space: SearchSpace,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        WalkForwardConfig {
            train_days: default_train_days(),
            trade_days: default_trade_days(),
            step_days: default_trade_days(),
            search: default_search(),
            search_budget: default_budget(),
            seed: 0,
            annualize_sharpe: true,
            min_entry_gap_minutes: default_gap_minutes(),
            max_open_positions: default_max_open(),
            short_cross_direction: CrossDirection::default(),
            space: SearchSpace::default(),
        }
    }
}

impl WalkForwardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_days == 0 || self.trade_days == 0 || self.step_days == 0 {
            return Err(Error::Config("window lengths must be >= 1 day".into()));
        }
        if self.search_budget == 0 {
            return Err(Error::Config("search_budget must be >= 1".into()));
        }
        if self.min_entry_gap_minutes < 0 {
            return Err(Error::Config("min_entry_gap_minutes must be >= 0".into()));
        }
        self.space.validate()
    }
}

fn strategy_from_parts(
    config: &WalkForwardConfig,
    vgrsi: PerTimeframe<VgrsiParams>,
    buy: f64,
    sell: f64,
    n: u64,
    z: u64,
) -> StrategyParams {
    StrategyParams {
        vgrsi,
        buy_threshold: buy,
        sell_threshold: sell,
        sl_tp_lookback: n as usize,
        sl_tp_multiplier: z as Price,
        min_entry_gap_minutes: config.min_entry_gap_minutes,
        max_open_positions: config.max_open_positions,
        short_cross_direction: config.short_cross_direction,
    }
}

/// Materialize the candidate list for one run. The same list is reused for
/// every window, so window results stay comparable and reruns reproducible.
///
/// Grid mode ties (W_S, W_V, variant) across timeframes and walks thresholds
/// and SL/TP settings on their strided grids, evenly thinned to the budget.
/// Random mode draws independent per-timeframe indicator parameters from the
/// seeded generator.
pub fn parameter_space(config: &WalkForwardConfig) -> Result<Vec<StrategyParams>> {
    config.validate()?;
    let space = &config.space;
    match config.search {
        SearchMode::Grid => {
            let dims: [u64; 7] = [
                space.window_size.grid_count(),
                space.window_visibility.grid_count(),
                space.variants.len() as u64,
                space.buy_threshold.grid_count(),
                space.sell_threshold.grid_count(),
                space.sl_tp_lookback.grid_count(),
                space.sl_tp_multiplier.grid_count(),
            ];
            let total: u64 = dims.iter().product();
            let budget = config.search_budget as u64;
            let picks: Vec<u64> = if total <= budget {
                (0..total).collect()
            } else {
                (0..budget).map(|k| k * total / budget).collect()
            };
            Ok(picks
                .into_iter()
                .map(|mut idx| {
                    let mut digits = [0u64; 7];
                    for (d, size) in digits.iter_mut().zip(dims).rev() {
                        *d = idx % size;
                        idx /= size;
                    }
                    let params = VgrsiParams::new(
                        space.window_size.grid_value(digits[0]) as usize,
                        space.window_visibility.grid_value(digits[1]) as usize,
                        space.variants[digits[2] as usize],
                    );
                    strategy_from_parts(
                        config,
                        PerTimeframe::uniform(params),
                        space.buy_threshold.grid_value(digits[3]),
                        space.sell_threshold.grid_value(digits[4]),
                        space.sl_tp_lookback.grid_value(digits[5]),
                        space.sl_tp_multiplier.grid_value(digits[6]),
                    )
                })
                .collect())
        }
        SearchMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let draw_params = |rng: &mut ChaCha8Rng| {
                let ws = rng.gen_range(space.window_size.min..=space.window_size.max);
                let wv = rng.gen_range(space.window_visibility.min..=space.window_visibility.max);
                let variant = space.variants[rng.gen_range(0..space.variants.len())];
                VgrsiParams::new(ws as usize, wv as usize, variant)
            };
            Ok((0..config.search_budget)
                .map(|_| {
                    let m1 = draw_params(&mut rng);
                    let m5 = draw_params(&mut rng);
                    let m30 = draw_params(&mut rng);
                    let buy = rng.gen_range(space.buy_threshold.min..=space.buy_threshold.max);
                    let sell = rng.gen_range(space.sell_threshold.min..=space.sell_threshold.max);
                    let n = rng.gen_range(space.sl_tp_lookback.min..=space.sl_tp_lookback.max);
                    let z = rng.gen_range(space.sl_tp_multiplier.min..=space.sl_tp_multiplier.max);
                    strategy_from_parts(config, PerTimeframe::new(m1, m5, m30), buy, sell, n, z)
                })
                .collect())
        }
    }
}

/// In-sample outcome of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CandidateEval {
    profit: Price,
    trades: u64,
    defined_evaluations: u64,
}

/// Argmax by profit; ties prefer fewer trades, then earlier enumeration.
fn select_best(evals: &[CandidateEval]) -> usize {
    let mut best = 0;
    for (i, e) in evals.iter().enumerate().skip(1) {
        let b = &evals[best];
        if e.profit > b.profit || (e.profit == b.profit && e.trades < b.trades) {
            best = i;
        }
    }
    best
}

/// Evaluate every candidate on the train window and pick the in-sample
/// winner. `train_data` must already be cut off at the train window's end;
/// bars before the window only warm up the indicators. Returns the winning
/// candidate's index and its in-sample profit.
pub fn optimize_window(
    train_data: &MarketData,
    candidates: &[StrategyParams],
    spec: &InstrumentSpec,
    account: &AccountConfig,
    window: TradeWindow,
    window_index: usize,
) -> Result<(usize, Price)> {
    if candidates.is_empty() {
        return Err(Error::InvalidParams("empty candidate list".into()));
    }
    let evals: Vec<CandidateEval> = candidates
        .par_iter()
        .map(|params| {
            let sim = simulate(train_data, params, spec, account, Some(window))?;
            Ok(CandidateEval {
                profit: sim.profit(),
                trades: sim.trades.len() as u64,
                defined_evaluations: sim.defined_evaluations,
            })
        })
        .collect::<Result<_>>()?;
    if evals.iter().all(|e| e.defined_evaluations == 0) {
        return Err(Error::NoDefinedIndicator {
            window_index,
            train_start: fmt_time(window.start),
            train_end: fmt_time(window.end),
        });
    }
    let best = select_best(&evals);
    Ok((best, evals[best].profit))
}

/// Serializable per-window record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: usize,
    pub train_start: Time,
    pub train_end: Time,
    pub trade_start: Time,
    pub trade_end: Time,
    pub params: StrategyParams,
    pub in_sample_profit: Price,
    pub stats: WindowStats,
}

/// One window's full artifacts: summary plus the out-of-sample logs.
#[derive(Debug, Clone)]
pub struct WindowOutcome {
    pub summary: WindowSummary,
    pub trades: Vec<TradeRecord>,
    pub equity: Vec<EquitySample>,
    pub signals: Vec<Signal>,
    pub rejections: Vec<RejectedOrder>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub window: usize,
    pub time: Time,
    pub cumulative_profit: Price,
}

/// Everything needed to verify an exact rerun: full configuration, a content
/// hash of the input data, and the per-window results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: WalkForwardConfig,
    pub instrument: InstrumentSpec,
    pub account: AccountConfig,
    pub data_fingerprint: String,
    pub windows: Vec<WindowSummary>,
    pub cumulative_profit: Vec<CumulativePoint>,
}

#[derive(Debug, Clone)]
pub struct WalkForwardReport {
    pub windows: Vec<WindowOutcome>,
    pub cumulative_profit: Vec<CumulativePoint>,
    pub manifest: RunManifest,
}

/// SHA-256 over a canonical rendering of all three candle streams.
pub fn data_fingerprint(data: &MarketData) -> String {
    let mut hasher = Sha256::new();
    for tf in TIMEFRAMES {
        for c in data.get(tf) {
            hasher.update(
                format!(
                    "{tf},{},{},{},{},{},{}\n",
                    fmt_time(c.open_time),
                    c.open,
                    c.high,
                    c.low,
                    c.close,
                    c.volume
                )
                .as_bytes(),
            );
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn midnight_before(t: Time) -> Time {
    t.date_naive().and_hms_opt(0, 0, 0).unwrap().and_utc()
}

/// Run the full walk-forward protocol over the data.
pub fn run(
    data: &MarketData,
    config: &WalkForwardConfig,
    spec: &InstrumentSpec,
    account: &AccountConfig,
) -> Result<WalkForwardReport> {
    config.validate()?;
    spec.validate()?;
    account.validate()?;
    let candidates = parameter_space(config)?;

    let anchor = midnight_before(data.start_time());
    let data_end = data.end_time();
    let mut outcomes: Vec<WindowOutcome> = Vec::new();
    let mut cumulative_profit = Vec::new();
    let mut running_total = 0.0;

    for w in 0.. {
        let train_start = anchor + Duration::days(w as i64 * config.step_days as i64);
        let train_end = train_start + Duration::days(config.train_days as i64);
        let trade_end = train_end + Duration::days(config.trade_days as i64);
        if trade_end > data_end {
            break;
        }

        let train_data = data.slice_until(train_end);
        let train_window = TradeWindow {
            start: train_start,
            end: train_end,
        };
        let (chosen, in_sample_profit) =
            optimize_window(&train_data, &candidates, spec, account, train_window, w)?;

        let oos_data = data.slice_until(trade_end);
        let oos_window = TradeWindow {
            start: train_end,
            end: trade_end,
        };
        let sim = simulate(
            &oos_data,
            &candidates[chosen],
            spec,
            account,
            Some(oos_window),
        )?;
        let window_equity: Vec<EquitySample> = sim
            .equity_curve
            .iter()
            .filter(|s| s.time >= train_end)
            .copied()
            .collect();
        let stats = compute_window_stats(
            &sim.trades,
            &window_equity,
            account.initial_balance,
            config.annualize_sharpe,
        )?;
        running_total += stats.profit;
        cumulative_profit.push(CumulativePoint {
            window: w,
            time: trade_end,
            cumulative_profit: running_total,
        });
        outcomes.push(WindowOutcome {
            summary: WindowSummary {
                window: w,
                train_start,
                train_end,
                trade_start: train_end,
                trade_end,
                params: candidates[chosen],
                in_sample_profit,
                stats,
            },
            trades: sim.trades,
            equity: window_equity,
            signals: sim.signals,
            rejections: sim.rejections,
        });
    }

    if outcomes.is_empty() {
        return Err(Error::InsufficientHistory {
            msg: format!(
                "need at least {} calendar days of data from {}, have up to {}",
                config.train_days + config.trade_days,
                fmt_time(anchor),
                fmt_time(data_end)
            ),
        });
    }

    let manifest = RunManifest {
        config: config.clone(),
        instrument: spec.clone(),
        account: *account,
        data_fingerprint: data_fingerprint(data),
        windows: outcomes.iter().map(|o| o.summary.clone()).collect(),
        cumulative_profit: cumulative_profit.clone(),
    };
    Ok(WalkForwardReport {
        windows: outcomes,
        cumulative_profit,
        manifest,
    })
}
