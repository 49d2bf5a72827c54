//! The visibility-based relative strength indicator.
//!
//! For each instant `t`, increments `Δp_i = p_i - p_{i-1}` selected by the
//! capped visibility sets of every `j ∈ [t - W_S + 1, t]` are split by sign
//! into amplitude sums `S±` and counts `N±`. The amplitude ratio
//! `r_S = S⁺/S⁻` and frequency ratio `r_N = N⁺/N⁻` are aggregated either as
//! their mean (variant A0) or their quotient (variant A1), and the result is
//! normalized to `[0, 100]` as `100 - 100/(1 + r_A)`.
//!
//! A visible index `i` contributes once per `(j, i)` pair: the same `i`
//! reachable from several `j` within the window is counted each time, the
//! double sum taken literally.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Float;
use crate::visibility::{visible_fast, VisibleSet};

/// How the amplitude and frequency ratios are combined into `r_A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Mean aggregation: `r_A = (r_S + r_N) / 2`. Behaves as a trend filter.
    A0,
    /// Ratio aggregation: `r_A = r_S / r_N`. Reacts to impulses whose
    /// amplitude outruns their frequency.
    A1,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A0 => "A0",
            Variant::A1 => "A1",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A0" => Ok(Variant::A0),
            "A1" => Ok(Variant::A1),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Full configuration of one indicator instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VgrsiParams {
    /// W_S: number of recent instants aggregated per value; also caps each
    /// visibility set.
    pub window_size: usize,
    /// W_V: lookback range for visibility candidates.
    pub window_visibility: usize,
    pub variant: Variant,
}

impl VgrsiParams {
    pub fn new(window_size: usize, window_visibility: usize, variant: Variant) -> Self {
        VgrsiParams {
            window_size,
            window_visibility,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.window_visibility == 0 {
            return Err(Error::InvalidParams(
                "window_size and window_visibility must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// First index with a defined value.
    pub fn warm_up(&self) -> usize {
        self.window_size
    }
}

/// A nonnegative ratio that distinguishes the `x/0` and `0/0` forms instead
/// of collapsing them into IEEE specials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio<T> {
    Finite(T),
    Infinite,
    Undefined,
}

impl<T: Float> Ratio<T> {
    /// `num/den` for nonnegative inputs: positive denominator divides,
    /// `x/0` with `x > 0` is infinite, `0/0` is undefined.
    pub fn of(num: T, den: T) -> Self {
        if den > T::zero() {
            Ratio::Finite(num / den)
        } else if num > T::zero() {
            Ratio::Infinite
        } else {
            Ratio::Undefined
        }
    }

    pub fn of_counts(num: u64, den: u64) -> Self {
        Ratio::of(T::from_u64(num).unwrap(), T::from_u64(den).unwrap())
    }

    /// Mean aggregation. Any undefined operand poisons the result; any
    /// infinite operand saturates it.
    pub fn mean(self, other: Self) -> Self {
        use Ratio::*;
        match (self, other) {
            (Undefined, _) | (_, Undefined) => Undefined,
            (Infinite, _) | (_, Infinite) => Infinite,
            (Finite(a), Finite(b)) => Finite((a + b) / T::from_u8(2).unwrap()),
        }
    }

    /// Quotient aggregation. The indeterminate forms `∞/∞` and `0/0` are
    /// undefined; `∞/finite` saturates high and `finite/∞` collapses to zero.
    pub fn quotient(self, other: Self) -> Self {
        use Ratio::*;
        match (self, other) {
            (Undefined, _) | (_, Undefined) => Undefined,
            (Infinite, Infinite) => Undefined,
            (Infinite, Finite(_)) => Infinite,
            (Finite(_), Infinite) => Finite(T::zero()),
            (Finite(a), Finite(b)) => {
                if b > T::zero() {
                    Finite(a / b)
                } else if a > T::zero() {
                    Infinite
                } else {
                    Undefined
                }
            }
        }
    }

    /// `100 - 100/(1 + r)`, saturating at 100 for infinite `r`.
    pub fn normalized(self) -> Option<T> {
        match self {
            Ratio::Finite(r) => Some(T::hundred() - T::hundred() / (T::one() + r)),
            Ratio::Infinite => Some(T::hundred()),
            Ratio::Undefined => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        !matches!(self, Ratio::Undefined)
    }
}

/// Everything computed on the way to one indicator value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgrsiComponents<T> {
    pub s_plus: T,
    pub s_minus: T,
    pub n_plus: u64,
    pub n_minus: u64,
    pub r_s: Ratio<T>,
    pub r_n: Ratio<T>,
    pub r_a: Ratio<T>,
    /// `100 - 100/(1 + r_A)`, or `None` when `r_A` is undefined.
    pub value: Option<T>,
}

impl<T: Float> VgrsiComponents<T> {
    /// Derive the ratio chain and value from already-aggregated sums.
    /// Sums must be nonnegative.
    pub fn from_sums(s_plus: T, s_minus: T, n_plus: u64, n_minus: u64, variant: Variant) -> Self {
        debug_assert!(s_plus >= T::zero() && s_minus >= T::zero());
        let r_s = Ratio::of(s_plus, s_minus);
        let r_n = Ratio::of_counts(n_plus, n_minus);
        let r_a = match variant {
            Variant::A0 => r_s.mean(r_n),
            Variant::A1 => r_s.quotient(r_n),
        };
        VgrsiComponents {
            s_plus,
            s_minus,
            n_plus,
            n_minus,
            r_s,
            r_n,
            r_a,
            value: r_a.normalized(),
        }
    }
}

fn check_series<T>(prices: &[T], params: &VgrsiParams) -> Result<()> {
    params.validate()?;
    if prices.is_empty() {
        return Err(Error::EmptyInput("vgrsi input"));
    }
    Ok(())
}

/// Indicator components at one instant. `t` must be past warm-up
/// (`t >= W_S`), which also guarantees every source `j` in the window has a
/// preceding increment range.
pub fn components_at<T: Float>(
    prices: &[T],
    t: usize,
    params: &VgrsiParams,
) -> Result<VgrsiComponents<T>> {
    check_series(prices, params)?;
    if t >= prices.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: prices.len(),
        });
    }
    if t < params.warm_up() {
        return Err(Error::WarmUp {
            t,
            warm_up: params.warm_up(),
        });
    }

    let mut s_plus = T::zero();
    let mut s_minus = T::zero();
    let mut n_plus = 0u64;
    let mut n_minus = 0u64;
    for j in t + 1 - params.window_size..=t {
        let set = visible_fast(prices, j, params.window_visibility, params.window_size)?;
        for &i in &set.visible {
            if i == 0 {
                // Δp_0 does not exist; index 0 is visible but contributes
                // nothing.
                continue;
            }
            let dp = prices[i] - prices[i - 1];
            if dp > T::zero() {
                s_plus = s_plus + dp;
                n_plus += 1;
            } else if dp < T::zero() {
                s_minus = s_minus - dp;
                n_minus += 1;
            }
        }
    }
    Ok(VgrsiComponents::from_sums(
        s_plus,
        s_minus,
        n_plus,
        n_minus,
        params.variant,
    ))
}

/// Per-`j` increment contributions, reusable across the overlapping windows
/// of consecutive `t`.
struct ContributionCache<T> {
    /// `deltas[j]` holds `Δp_i` for each visible `i >= 1` of `j`, in set
    /// order, so re-accumulation replays the exact operation sequence of
    /// [`components_at`].
    deltas: Vec<Vec<T>>,
}

impl<T: Float> ContributionCache<T> {
    fn build(prices: &[T], params: &VgrsiParams) -> Result<Self> {
        let mut deltas = Vec::with_capacity(prices.len());
        for j in 0..prices.len() {
            let set: VisibleSet =
                visible_fast(prices, j, params.window_visibility, params.window_size)?;
            let mut row = Vec::with_capacity(set.visible.len());
            for &i in &set.visible {
                if i >= 1 {
                    row.push(prices[i] - prices[i - 1]);
                }
            }
            deltas.push(row);
        }
        Ok(ContributionCache { deltas })
    }

    fn components(&self, t: usize, params: &VgrsiParams) -> VgrsiComponents<T> {
        let mut s_plus = T::zero();
        let mut s_minus = T::zero();
        let mut n_plus = 0u64;
        let mut n_minus = 0u64;
        for j in t + 1 - params.window_size..=t {
            for &dp in &self.deltas[j] {
                if dp > T::zero() {
                    s_plus = s_plus + dp;
                    n_plus += 1;
                } else if dp < T::zero() {
                    s_minus = s_minus - dp;
                    n_minus += 1;
                }
            }
        }
        VgrsiComponents::from_sums(s_plus, s_minus, n_plus, n_minus, params.variant)
    }
}

/// Indicator value at every instant from warm-up onward, as
/// `(t, value-or-undefined)` pairs.
pub fn rolling<T: Float>(prices: &[T], params: &VgrsiParams) -> Result<Vec<(usize, Option<T>)>> {
    check_series(prices, params)?;
    if prices.len() < params.window_size + 1 {
        return Err(Error::SeriesTooShort {
            len: prices.len(),
            required: params.window_size + 1,
        });
    }
    let cache = ContributionCache::build(prices, params)?;
    Ok((params.warm_up()..prices.len())
        .map(|t| (t, cache.components(t, params).value))
        .collect())
}

/// Like [`rolling`] but index-aligned with the input: one entry per price,
/// `None` during warm-up.
pub fn rolling_aligned<T: Float>(prices: &[T], params: &VgrsiParams) -> Result<Vec<Option<T>>> {
    let mut out = vec![None; prices.len()];
    for (t, v) in rolling(prices, params)? {
        out[t] = v;
    }
    Ok(out)
}
