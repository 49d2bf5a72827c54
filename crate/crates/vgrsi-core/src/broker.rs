//! Bar-level execution simulator: margin-sized entries, SL/TP monitoring on
//! bid/ask-adjusted bar ranges, spread and commission accounting, and equity
//! tracking.
//!
//! Accounting rules: the balance changes only when a position closes, by
//! exactly the trade's `realized_pnl` (which already contains both sides'
//! commission); equity is balance plus the open positions' price-only
//! unrealized PnL. Intrabar ambiguity is resolved pessimistically: when one
//! bar spans both SL and TP, the SL fill wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{Candle, InstrumentSpec, MarketData, PerTimeframe, Timeframe};
use crate::signals::{evaluate_entry, sl_tp_distance, Direction, Signal, StrategyParams};
use crate::vgrsi::{rolling_aligned, VgrsiParams};
use crate::{Price, Time};

fn default_initial_balance() -> Price {
    10_000.0
}

fn default_leverage() -> Price {
    100.0
}

fn default_margin_budget() -> Price {
    1_000.0
}

/// Account sizing rules: fixed margin budget per trade, notional =
/// budget × leverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountConfig {
    #[serde(default = "default_initial_balance")]
    pub initial_balance: Price,
    #[serde(default = "default_leverage")]
    pub leverage: Price,
    #[serde(default = "default_margin_budget")]
    pub margin_budget: Price,
}

impl Default for AccountConfig {
    fn default() -> Self {
        AccountConfig {
            initial_balance: default_initial_balance(),
            leverage: default_leverage(),
            margin_budget: default_margin_budget(),
        }
    }
}

impl AccountConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_balance > 0.0) || !(self.leverage > 0.0) || self.margin_budget < 0.0 {
            return Err(Error::InvalidParams(
                "account requires positive balance and leverage, nonnegative margin budget".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub direction: Direction,
    /// Ask for long, bid for short.
    pub entry_price: Price,
    pub volume_lots: Price,
    pub sl_price: Price,
    pub tp_price: Price,
    pub open_time: Time,
    pub margin_used: Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Sl,
    Tp,
    EndOfWindow,
}

impl std::fmt::Display for ExitReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExitReason::Sl => "sl",
            ExitReason::Tp => "tp",
            ExitReason::EndOfWindow => "end_of_window",
        })
    }
}

/// One completed round-trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub direction: Direction,
    pub entry_price: Price,
    pub volume_lots: Price,
    pub sl_price: Price,
    pub tp_price: Price,
    pub open_time: Time,
    pub margin_used: Price,
    pub exit_price: Price,
    pub exit_time: Time,
    pub exit_reason: ExitReason,
    pub commission_paid: Price,
    /// Signed price PnL minus all commissions; the exact balance increment.
    pub realized_pnl: Price,
}

/// An entry attempt that could not be filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedOrder {
    pub time: Time,
    pub direction: Direction,
    pub reason: String,
}

/// Mutable trading account.
#[derive(Debug, Clone)]
pub struct AccountState {
    pub config: AccountConfig,
    pub balance: Price,
    pub equity: Price,
    pub peak_equity: Price,
    pub open_positions: Vec<Position>,
}

impl AccountState {
    pub fn new(config: AccountConfig) -> Self {
        AccountState {
            config,
            balance: config.initial_balance,
            equity: config.initial_balance,
            peak_equity: config.initial_balance,
            open_positions: Vec::new(),
        }
    }

    fn margin_in_use(&self) -> Price {
        self.open_positions.iter().map(|p| p.margin_used).sum()
    }

    /// Size and open a position from a signal at the current market.
    /// `mid` is the instant's mid price; long fills at ask, short at bid.
    pub fn open_position(
        &mut self,
        signal: &Signal,
        mid: Price,
        spec: &InstrumentSpec,
    ) -> std::result::Result<Position, RejectedOrder> {
        let reject = |reason: String| RejectedOrder {
            time: signal.time,
            direction: signal.direction,
            reason,
        };
        let entry_price = match signal.direction {
            Direction::Long => spec.ask(mid),
            Direction::Short => spec.bid(mid),
        };
        let raw_lots =
            self.config.margin_budget * self.config.leverage / (entry_price * spec.contract_size);
        let volume_lots = (raw_lots * 100.0).floor() / 100.0;
        if volume_lots < 0.01 {
            return Err(reject(format!(
                "volume below 0.01 lots (budget {} at price {entry_price})",
                self.config.margin_budget
            )));
        }
        let free_margin = self.equity - self.margin_in_use();
        if self.config.margin_budget > free_margin {
            return Err(reject(format!(
                "insufficient free margin ({free_margin:.2} < {:.2})",
                self.config.margin_budget
            )));
        }
        let distance = spec.from_points(signal.sl_distance_points);
        let (sl_price, tp_price) = match signal.direction {
            Direction::Long => (entry_price - distance, entry_price + distance),
            Direction::Short => (entry_price + distance, entry_price - distance),
        };
        let position = Position {
            direction: signal.direction,
            entry_price,
            volume_lots,
            sl_price,
            tp_price,
            open_time: signal.time,
            margin_used: self.config.margin_budget,
        };
        self.open_positions.push(position);
        Ok(position)
    }

    fn close(
        &mut self,
        position: Position,
        exit_price: Price,
        exit_time: Time,
        exit_reason: ExitReason,
        spec: &InstrumentSpec,
    ) -> TradeRecord {
        let price_pnl = (exit_price - position.entry_price)
            * position.direction.sign()
            * position.volume_lots
            * spec.contract_size;
        let commission_paid = spec.commission_per_lot * position.volume_lots * 2.0;
        let realized_pnl = price_pnl - commission_paid;
        self.balance += realized_pnl;
        TradeRecord {
            direction: position.direction,
            entry_price: position.entry_price,
            volume_lots: position.volume_lots,
            sl_price: position.sl_price,
            tp_price: position.tp_price,
            open_time: position.open_time,
            margin_used: position.margin_used,
            exit_price,
            exit_time,
            exit_reason,
            commission_paid,
            realized_pnl,
        }
    }

    fn unrealized(&self, position: &Position, mid_close: Price, spec: &InstrumentSpec) -> Price {
        let quote = match position.direction {
            Direction::Long => spec.bid(mid_close),
            Direction::Short => spec.ask(mid_close),
        };
        (quote - position.entry_price)
            * position.direction.sign()
            * position.volume_lots
            * spec.contract_size
    }

    fn refresh_equity(&mut self, mid_close: Price, spec: &InstrumentSpec) {
        let unrealized: Price = self
            .open_positions
            .iter()
            .map(|p| self.unrealized(p, mid_close, spec))
            .sum();
        self.equity = self.balance + unrealized;
        self.peak_equity = self.peak_equity.max(self.equity);
    }

    /// Resolve SL/TP touches of every open position against one M1 bar and
    /// refresh equity at its close. Positions are examined against the bar's
    /// exit-side quotes (bid for longs, ask for shorts); a bar spanning both
    /// levels fills the SL.
    pub fn step_bar(&mut self, bar: &Candle, spec: &InstrumentSpec) -> Vec<TradeRecord> {
        let mut records = Vec::new();
        let mut k = 0;
        while k < self.open_positions.len() {
            let p = self.open_positions[k];
            let exit = match p.direction {
                Direction::Long => {
                    let (bid_low, bid_high) = (spec.bid(bar.low), spec.bid(bar.high));
                    if bid_low <= p.sl_price {
                        Some((p.sl_price, ExitReason::Sl))
                    } else if bid_high >= p.tp_price {
                        Some((p.tp_price, ExitReason::Tp))
                    } else {
                        None
                    }
                }
                Direction::Short => {
                    let (ask_low, ask_high) = (spec.ask(bar.low), spec.ask(bar.high));
                    if ask_high >= p.sl_price {
                        Some((p.sl_price, ExitReason::Sl))
                    } else if ask_low <= p.tp_price {
                        Some((p.tp_price, ExitReason::Tp))
                    } else {
                        None
                    }
                }
            };
            match exit {
                Some((price, reason)) => {
                    self.open_positions.remove(k);
                    records.push(self.close(p, price, bar.open_time, reason, spec));
                }
                None => k += 1,
            }
        }
        self.refresh_equity(bar.close, spec);
        records
    }

    /// Liquidate everything at the current market.
    pub fn close_all(&mut self, time: Time, mid: Price, spec: &InstrumentSpec) -> Vec<TradeRecord> {
        let positions = std::mem::take(&mut self.open_positions);
        let records: Vec<TradeRecord> = positions
            .into_iter()
            .map(|p| {
                let exit_price = match p.direction {
                    Direction::Long => spec.bid(mid),
                    Direction::Short => spec.ask(mid),
                };
                self.close(p, exit_price, time, ExitReason::EndOfWindow, spec)
            })
            .collect();
        self.refresh_equity(mid, spec);
        records
    }
}

/// One equity-curve sample, taken at each M1 bar close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquitySample {
    pub time: Time,
    pub balance: Price,
    pub equity: Price,
}

/// Everything one simulation run produces.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub trades: Vec<TradeRecord>,
    pub equity_curve: Vec<EquitySample>,
    pub signals: Vec<Signal>,
    pub rejections: Vec<RejectedOrder>,
    pub initial_balance: Price,
    pub final_balance: Price,
    /// M1 bars where all three timeframes had defined indicator values.
    pub defined_evaluations: u64,
}

impl SimResult {
    pub fn profit(&self) -> Price {
        self.final_balance - self.initial_balance
    }
}

/// Rolling indicator values for one timeframe, or all-undefined when the
/// series is shorter than the warm-up.
fn indicator_values(candles: &[Candle], params: &VgrsiParams) -> Result<Vec<Option<Price>>> {
    let prices: Vec<Price> = candles.iter().map(|c| c.close).collect();
    match rolling_aligned(&prices, params) {
        Ok(values) => Ok(values),
        Err(Error::SeriesTooShort { .. }) | Err(Error::EmptyInput(_)) => {
            Ok(vec![None; prices.len()])
        }
        Err(e) => Err(e),
    }
}

/// Walk the latest two completed higher-timeframe values as M1 time advances.
struct TimeframeCursor<'a> {
    candles: &'a [Candle],
    values: Vec<Option<Price>>,
    /// Number of bars completed so far.
    completed: usize,
}

impl<'a> TimeframeCursor<'a> {
    fn new(candles: &'a [Candle], params: &VgrsiParams) -> Result<Self> {
        Ok(TimeframeCursor {
            candles,
            values: indicator_values(candles, params)?,
            completed: 0,
        })
    }

    /// Advance to `now` (an M1 close instant) and return the (prev, curr)
    /// values of the last two completed bars.
    fn state_at(&mut self, now: Time) -> (Option<Price>, Option<Price>) {
        while self.completed < self.candles.len()
            && self.candles[self.completed].close_time() <= now
        {
            self.completed += 1;
        }
        let value = |idx: Option<usize>| idx.and_then(|i| self.values[i]);
        let curr = value(self.completed.checked_sub(1));
        let prev = value(self.completed.checked_sub(2));
        (prev, curr)
    }
}

/// Trading window: entries allowed for bars labeled within `[start, end)`;
/// everything still open at the end is liquidated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeWindow {
    pub start: Time,
    pub end: Time,
}

/// Run the full strategy over `data`: indicator computation per timeframe,
/// entry gating once per completed M1 bar, SL/TP resolution, and final
/// liquidation. Bars before `window.start` (when given) serve as indicator
/// and SL/TP warm-up only.
pub fn simulate(
    data: &MarketData,
    strategy: &StrategyParams,
    spec: &InstrumentSpec,
    account: &AccountConfig,
    window: Option<TradeWindow>,
) -> Result<SimResult> {
    strategy.validate()?;
    spec.validate()?;
    account.validate()?;

    let m1 = data.get(Timeframe::M1);
    if m1.is_empty() {
        return Err(Error::EmptyInput("simulation market data"));
    }
    let m1_values = indicator_values(m1, &strategy.vgrsi.m1)?;
    let mut m5 = TimeframeCursor::new(data.get(Timeframe::M5), &strategy.vgrsi.m5)?;
    let mut m30 = TimeframeCursor::new(data.get(Timeframe::M30), &strategy.vgrsi.m30)?;

    let mut account = AccountState::new(*account);
    let mut trades = Vec::new();
    let mut equity_curve = Vec::with_capacity(m1.len());
    let mut signals = Vec::new();
    let mut rejections = Vec::new();
    let mut defined_evaluations = 0u64;
    let mut last_entry: Option<Time> = None;

    for (idx, bar) in m1.iter().enumerate() {
        if let Some(w) = window {
            if bar.open_time >= w.end {
                break;
            }
        }
        trades.extend(account.step_bar(bar, spec));

        let state = PerTimeframe {
            m1: (
                idx.checked_sub(1).and_then(|i| m1_values[i]),
                m1_values[idx],
            ),
            m5: m5.state_at(bar.close_time()),
            m30: m30.state_at(bar.close_time()),
        };
        let defined = [state.m1, state.m5, state.m30]
            .iter()
            .all(|(p, c)| p.is_some() && c.is_some());
        if defined {
            defined_evaluations += 1;
        }

        let in_window = window.is_none_or(|w| bar.open_time >= w.start);
        if in_window {
            if let Some(direction) = evaluate_entry(
                &state,
                strategy,
                account.open_positions.len(),
                last_entry,
                bar.open_time,
            ) {
                match sl_tp_distance(
                    &m1[..=idx],
                    strategy.sl_tp_lookback,
                    strategy.sl_tp_multiplier,
                    spec,
                ) {
                    Ok(distance) => {
                        let signal = Signal {
                            time: bar.open_time,
                            direction,
                            sl_distance_points: distance,
                            tp_distance_points: distance,
                            snapshot: state.map(|_, (_, curr)| *curr),
                        };
                        signals.push(signal);
                        match account.open_position(&signal, bar.close, spec) {
                            Ok(_) => last_entry = Some(bar.open_time),
                            Err(rejection) => rejections.push(rejection),
                        }
                    }
                    Err(_) => rejections.push(RejectedOrder {
                        time: bar.open_time,
                        direction,
                        reason: format!(
                            "fewer than {} completed candles for SL/TP sizing",
                            strategy.sl_tp_lookback
                        ),
                    }),
                }
            }
        }
        account.refresh_equity(bar.close, spec);
        equity_curve.push(EquitySample {
            time: bar.open_time,
            balance: account.balance,
            equity: account.equity,
        });
    }

    if let Some(last) = equity_curve.last().map(|s| s.time) {
        let mid = m1
            .iter()
            .take_while(|c| c.open_time <= last)
            .last()
            .unwrap()
            .close;
        let closed = account.close_all(last, mid, spec);
        if !closed.is_empty() {
            trades.extend(closed);
            let tail = equity_curve.last_mut().unwrap();
            tail.balance = account.balance;
            tail.equity = account.equity;
        }
    }

    Ok(SimResult {
        trades,
        equity_curve,
        signals,
        rejections,
        initial_balance: account.config.initial_balance,
        final_balance: account.balance,
        defined_evaluations,
    })
}
