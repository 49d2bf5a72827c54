//! Entry signals from multi-timeframe threshold crossings and the
//! median-candle-height SL/TP sizing rule.

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{Candle, InstrumentSpec, PerTimeframe};
use crate::vgrsi::VgrsiParams;
use crate::{Price, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Long,
    Short,
}

impl Direction {
    /// +1 for long, -1 for short.
    pub fn sign(self) -> Price {
        match self {
            Direction::Long => 1.0,
            Direction::Short => -1.0,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Long => "long",
            Direction::Short => "short",
        })
    }
}

/// Which way the indicator must pass through the sell threshold to open a
/// short. `Down` is the literal reading of the entry rule (same wording as
/// the buy side); `Up` is the conventional overbought trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossDirection {
    #[default]
    Down,
    Up,
}

fn default_gap_minutes() -> i64 {
    30
}

fn default_max_open() -> usize {
    2
}

/// Full strategy configuration: indicator parameters per timeframe, entry
/// thresholds, SL/TP sizing, and entry suppression limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub vgrsi: PerTimeframe<VgrsiParams>,
    pub buy_threshold: Price,
    pub sell_threshold: Price,
    /// N: lookback (in completed M1 candles) for the median height.
    pub sl_tp_lookback: usize,
    /// Z: multiplier applied to the median height.
    pub sl_tp_multiplier: Price,
    #[serde(default = "default_gap_minutes")]
    pub min_entry_gap_minutes: i64,
    #[serde(default = "default_max_open")]
    pub max_open_positions: usize,
    #[serde(default)]
    pub short_cross_direction: CrossDirection,
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        for tf in [&self.vgrsi.m1, &self.vgrsi.m5, &self.vgrsi.m30] {
            tf.validate()?;
        }
        if !(self.buy_threshold < self.sell_threshold) {
            return Err(Error::InvalidParams(format!(
                "buy_threshold ({}) must be below sell_threshold ({})",
                self.buy_threshold, self.sell_threshold
            )));
        }
        if self.sl_tp_lookback == 0 {
            return Err(Error::InvalidParams("sl_tp_lookback must be >= 1".into()));
        }
        if !(self.sl_tp_multiplier > 0.0) {
            return Err(Error::InvalidParams("sl_tp_multiplier must be > 0".into()));
        }
        if self.min_entry_gap_minutes < 0 {
            return Err(Error::InvalidParams(
                "min_entry_gap_minutes must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn min_entry_gap(&self) -> Duration {
        Duration::minutes(self.min_entry_gap_minutes)
    }
}

/// One timeframe's last two completed-bar indicator values
/// (previous, current).
pub type ValuePair = (Option<Price>, Option<Price>);

/// An entry decision with its symmetric SL/TP distances and the indicator
/// values that triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub time: Time,
    pub direction: Direction,
    pub sl_distance_points: i64,
    pub tp_distance_points: i64,
    /// Per-timeframe indicator values at the trigger instant.
    pub snapshot: PerTimeframe<Option<Price>>,
}

/// Downward cross: defined on both bars, previously above, now at or below.
pub fn crossing(prev: Option<Price>, curr: Option<Price>, threshold: Price) -> bool {
    matches!((prev, curr), (Some(p), Some(c)) if p > threshold && c <= threshold)
}

/// Upward cross: defined on both bars, previously below, now at or above.
pub fn crossing_up(prev: Option<Price>, curr: Option<Price>, threshold: Price) -> bool {
    matches!((prev, curr), (Some(p), Some(c)) if p < threshold && c >= threshold)
}

/// Entry gate evaluated once per completed M1 bar.
///
/// `state` carries each timeframe's last two completed-bar indicator values
/// as of `now`; between higher-timeframe closes the pair is unchanged, which
/// holds a detected cross active until that timeframe's next close. A long
/// needs the buy threshold crossed downward on all three timeframes at once;
/// a short needs the sell threshold crossed (direction per configuration) on
/// all three. Suppressed by the position cap and the minimum entry gap;
/// contradictory simultaneous triggers cancel.
pub fn evaluate_entry(
    state: &PerTimeframe<ValuePair>,
    params: &StrategyParams,
    open_count: usize,
    last_entry: Option<Time>,
    now: Time,
) -> Option<Direction> {
    if open_count >= params.max_open_positions {
        return None;
    }
    if let Some(last) = last_entry {
        if now - last < params.min_entry_gap() {
            return None;
        }
    }
    let all = |f: &dyn Fn(&ValuePair) -> bool| f(&state.m1) && f(&state.m5) && f(&state.m30);
    let long = all(&|&(prev, curr)| crossing(prev, curr, params.buy_threshold));
    let short = match params.short_cross_direction {
        CrossDirection::Down => all(&|&(prev, curr)| crossing(prev, curr, params.sell_threshold)),
        CrossDirection::Up => all(&|&(prev, curr)| crossing_up(prev, curr, params.sell_threshold)),
    };
    match (long, short) {
        (true, false) => Some(Direction::Long),
        (false, true) => Some(Direction::Short),
        // Both at once is a contradictory state; neither side wins.
        _ => None,
    }
}

/// Symmetric SL/TP distance: median of the last `n` candle heights in
/// points, times `z`, rounded to whole points, at least 1 point.
pub fn sl_tp_distance(
    recent_candles: &[Candle],
    n: usize,
    z: Price,
    spec: &InstrumentSpec,
) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidParams("sl_tp_lookback must be >= 1".into()));
    }
    if !(z > 0.0) {
        return Err(Error::InvalidParams("sl_tp_multiplier must be > 0".into()));
    }
    if recent_candles.len() < n {
        return Err(Error::InsufficientData {
            required: n,
            available: recent_candles.len(),
        });
    }
    let mut heights: Vec<Price> = recent_candles[recent_candles.len() - n..]
        .iter()
        .map(|c| spec.to_points(c.high - c.low))
        .collect();
    heights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        heights[n / 2]
    } else {
        (heights[n / 2 - 1] + heights[n / 2]) / 2.0
    };
    Ok(((median * z).round() as i64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::Timeframe;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn t(min: i64) -> Time {
        Utc.with_ymd_and_hms(2024, 3, 4, 12, 0, 0).unwrap() + Duration::minutes(min)
    }

    fn spec() -> InstrumentSpec {
        InstrumentSpec {
            symbol: "EURUSD".into(),
            point: 0.0001,
            contract_size: 100_000.0,
            quote_currency: "USD".into(),
            commission_per_lot: 0.0,
            default_spread_points: 0,
        }
    }

    fn candle_with_height(points: Price) -> Candle {
        let low = 1.1000;
        Candle {
            open_time: t(0),
            timeframe: Timeframe::M1,
            open: low,
            high: low + points * 0.0001,
            low,
            close: low,
            volume: 1,
        }
    }

    fn params() -> StrategyParams {
        StrategyParams {
            vgrsi: PerTimeframe::uniform(VgrsiParams::new(10, 10, crate::vgrsi::Variant::A0)),
            buy_threshold: 30.0,
            sell_threshold: 70.0,
            sl_tp_lookback: 3,
            sl_tp_multiplier: 2.0,
            min_entry_gap_minutes: 30,
            max_open_positions: 2,
            short_cross_direction: CrossDirection::Down,
        }
    }

    #[test]
    fn downward_cross_definition() {
        assert!(crossing(Some(36.0), Some(34.0), 35.0));
        assert!(!crossing(Some(34.0), Some(33.0), 35.0), "already below");
        assert!(!crossing(None, Some(30.0), 35.0), "warm-up guard");
        assert!(!crossing(Some(36.0), None, 35.0));
        assert!(crossing(Some(35.1), Some(35.0), 35.0), "touch counts");
    }

    #[test]
    fn upward_cross_definition() {
        assert!(crossing_up(Some(65.0), Some(75.0), 70.0));
        assert!(!crossing_up(Some(75.0), Some(80.0), 70.0));
        assert!(!crossing_up(None, Some(75.0), 70.0));
    }

    fn all_cross_down_state() -> PerTimeframe<ValuePair> {
        PerTimeframe::uniform((Some(32.0), Some(28.0)))
    }

    #[test]
    fn conjunctive_gate_requires_all_timeframes() {
        let p = params();
        let state = all_cross_down_state();
        assert_eq!(
            evaluate_entry(&state, &p, 0, None, t(0)),
            Some(Direction::Long)
        );
        let mut partial = state;
        partial.m30 = (Some(40.0), Some(38.0));
        assert_eq!(evaluate_entry(&partial, &p, 0, None, t(0)), None);
    }

    #[test]
    fn entry_gap_suppresses_recent_followups() {
        let p = params();
        let state = all_cross_down_state();
        assert_eq!(evaluate_entry(&state, &p, 0, Some(t(-10)), t(0)), None);
        assert_eq!(
            evaluate_entry(&state, &p, 0, Some(t(-30)), t(0)),
            Some(Direction::Long),
            "gap boundary is inclusive"
        );
    }

    #[test]
    fn position_cap_suppresses_entries() {
        let p = params();
        let state = all_cross_down_state();
        assert_eq!(evaluate_entry(&state, &p, 2, None, t(0)), None);
        assert_eq!(
            evaluate_entry(&state, &p, 1, None, t(0)),
            Some(Direction::Long)
        );
    }

    #[test]
    fn simultaneous_opposite_triggers_cancel() {
        // A collapse from 80 to 20 crosses both thresholds downward at once.
        let p = params();
        let state = PerTimeframe::uniform((Some(80.0), Some(20.0)));
        assert_eq!(evaluate_entry(&state, &p, 0, None, t(0)), None);
    }

    #[test]
    fn short_side_honors_configured_direction() {
        let mut p = params();
        let down = PerTimeframe::uniform((Some(75.0), Some(65.0)));
        let up = PerTimeframe::uniform((Some(65.0), Some(75.0)));
        assert_eq!(
            evaluate_entry(&down, &p, 0, None, t(0)),
            Some(Direction::Short)
        );
        assert_eq!(evaluate_entry(&up, &p, 0, None, t(0)), None);
        p.short_cross_direction = CrossDirection::Up;
        assert_eq!(evaluate_entry(&down, &p, 0, None, t(0)), None);
        assert_eq!(
            evaluate_entry(&up, &p, 0, None, t(0)),
            Some(Direction::Short)
        );
    }

    #[test]
    fn undefined_values_never_signal() {
        let p = params();
        let state = PerTimeframe::uniform((None, Some(20.0)));
        assert_eq!(evaluate_entry(&state, &p, 0, None, t(0)), None);
    }

    #[test]
    fn median_height_times_multiplier() {
        let candles: Vec<Candle> = [10.0, 20.0, 30.0].map(candle_with_height).to_vec();
        assert_eq!(sl_tp_distance(&candles, 3, 2.0, &spec()).unwrap(), 40);
    }

    #[test]
    fn even_count_median_averages_middle_pair() {
        let candles: Vec<Candle> = [10.0, 20.0].map(candle_with_height).to_vec();
        assert_eq!(sl_tp_distance(&candles, 2, 1.0, &spec()).unwrap(), 15);
    }

    #[test]
    fn flat_candles_floor_at_one_point() {
        let candles: Vec<Candle> = [0.0, 0.0, 0.0].map(candle_with_height).to_vec();
        assert_eq!(sl_tp_distance(&candles, 3, 5.0, &spec()).unwrap(), 1);
    }

    #[test]
    fn lookback_uses_most_recent_candles() {
        let candles: Vec<Candle> = [100.0, 10.0, 20.0, 30.0].map(candle_with_height).to_vec();
        assert_eq!(sl_tp_distance(&candles, 3, 1.0, &spec()).unwrap(), 20);
    }

    #[test]
    fn too_few_candles_is_an_error() {
        let candles: Vec<Candle> = [10.0].map(candle_with_height).to_vec();
        assert!(matches!(
            sl_tp_distance(&candles, 3, 1.0, &spec()),
            Err(Error::InsufficientData {
                required: 3,
                available: 1
            })
        ));
    }

    proptest! {
        #[test]
        fn distance_is_monotone_in_multiplier(heights in proptest::collection::vec(0.0f64..500.0, 1..20),
                                              z1 in 0.5f64..10.0,
                                              bump in 0.0f64..5.0) {
            let candles: Vec<Candle> = heights.iter().map(|&h| candle_with_height(h)).collect();
            let n = candles.len();
            let d1 = sl_tp_distance(&candles, n, z1, &spec()).unwrap();
            let d2 = sl_tp_distance(&candles, n, z1 + bump, &spec()).unwrap();
            prop_assert!(d1 <= d2);
        }

        #[test]
        fn distance_ignores_candle_order(heights in proptest::collection::vec(0.0f64..500.0, 1..12),
                                         z in 0.5f64..10.0,
                                         rot in 0usize..12) {
            let candles: Vec<Candle> = heights.iter().map(|&h| candle_with_height(h)).collect();
            let mut rotated = candles.clone();
            rotated.rotate_left(rot % candles.len());
            let n = candles.len();
            prop_assert_eq!(
                sl_tp_distance(&candles, n, z, &spec()).unwrap(),
                sl_tp_distance(&rotated, n, z, &spec()).unwrap()
            );
        }
    }
}
