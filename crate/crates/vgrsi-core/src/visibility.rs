//! Backward visibility sets over a price series.
//!
//! An earlier point `(i, p_i)` is visible from `(j, p_j)` iff every
//! intermediate price lies strictly below the segment connecting them:
//! for all k with i < k < j, `p_k < p_j + (p_i - p_j) / (i - j) * (k - j)`.
//! Candidates are restricted to the lookback range `[max(0, j - w_v), j - 1]`
//! and at most `w_s` visible indices are kept, nearest first.
//!
//! Two implementations are provided: a direct triple-loop oracle and a
//! single-pass slope scan. Their equivalence is asserted by tests, not
//! assumed. Comparisons are raw floating-point with no epsilon.

use crate::error::{Error, Result};
use crate::num::Float;

/// Indices visible from `j`, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleSet {
    pub j: usize,
    /// Strictly decreasing indices (nearest first).
    pub visible: Vec<usize>,
    /// True iff the cap dropped at least one visible index.
    pub capped: bool,
}

fn check_range(len: usize, j: usize, w_v: usize) -> Result<()> {
    if j >= len {
        return Err(Error::IndexOutOfRange { index: j, len });
    }
    if w_v == 0 {
        return Err(Error::InvalidParams("w_v must be >= 1".into()));
    }
    Ok(())
}

/// Brute-force reference: test every candidate `i` against every intermediate
/// `k` with the segment inequality. Uncapped.
pub fn visible_oracle<T: Float>(prices: &[T], j: usize, w_v: usize) -> Result<VisibleSet> {
    check_range(prices.len(), j, w_v)?;
    let lo = j.saturating_sub(w_v);
    let mut visible = Vec::new();
    for i in (lo..j).rev() {
        let blocked = (i + 1..j).any(|k| {
            // Segment from (i, p_i) to (j, p_j) evaluated at k; both index
            // differences are negated to stay in unsigned arithmetic.
            let di = T::from_usize(j - i).unwrap();
            let dk = T::from_usize(j - k).unwrap();
            let line = prices[j] + (prices[i] - prices[j]) * dk / di;
            !(prices[k] < line)
        });
        if !blocked {
            visible.push(i);
        }
    }
    Ok(VisibleSet {
        j,
        visible,
        capped: false,
    })
}

/// Slope scan: walk `i` from `j - 1` down, keeping the running minimum of
/// `m(x) = (p_x - p_j) / (x - j)`; `i` is visible iff its slope is strictly
/// below every slope between it and `j`. Stops at the first visible index
/// past the cap, which is recorded in `capped` without being collected.
pub fn visible_fast<T: Float>(
    prices: &[T],
    j: usize,
    w_v: usize,
    w_s: usize,
) -> Result<VisibleSet> {
    check_range(prices.len(), j, w_v)?;
    if w_s == 0 {
        return Err(Error::InvalidParams("w_s must be >= 1".into()));
    }
    let lo = j.saturating_sub(w_v);
    let mut visible = Vec::new();
    let mut m_min = T::infinity();
    let mut capped = false;
    for i in (lo..j).rev() {
        let slope = (prices[j] - prices[i]) / T::from_usize(j - i).unwrap();
        if slope < m_min {
            if visible.len() == w_s {
                capped = true;
                break;
            }
            visible.push(i);
        }
        m_min = m_min.min(slope);
    }
    Ok(VisibleSet { j, visible, capped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn indices(prices: &[f64], j: usize, w_v: usize) -> Vec<usize> {
        visible_oracle(prices, j, w_v).unwrap().visible
    }

    #[test]
    fn collinear_intermediate_blocks() {
        assert_eq!(indices(&[1.0, 2.0, 3.0], 2, 10), vec![1]);
    }

    #[test]
    fn dip_keeps_both_visible() {
        assert_eq!(indices(&[3.0, 1.0, 2.0], 2, 10), vec![1, 0]);
    }

    #[test]
    fn adjacent_point_is_always_visible() {
        for prices in [[5.0, 1.0], [1.0, 5.0], [2.0, 2.0]] {
            assert_eq!(indices(&prices, 1, 1), vec![0]);
        }
    }

    #[test]
    fn lookback_limits_candidates() {
        assert_eq!(indices(&[1.0, 2.0, 3.0], 2, 1), vec![1]);
    }

    #[test]
    fn cap_keeps_nearest() {
        let set = visible_fast(&[3.0, 1.0, 2.0], 2, 10, 1).unwrap();
        assert_eq!(set.visible, vec![1]);
        assert!(set.capped);
        let set = visible_fast(&[3.0, 1.0, 2.0], 2, 10, 2).unwrap();
        assert_eq!(set.visible, vec![1, 0]);
        assert!(!set.capped);
    }

    #[test]
    fn straight_decline_sees_only_neighbor() {
        let set = visible_fast(&[5.0, 4.0, 3.0, 2.0, 1.0], 4, 10, 10).unwrap();
        assert_eq!(set.visible, vec![3]);
        assert!(!set.capped);
    }

    #[test]
    fn first_index_has_empty_set() {
        let set = visible_fast(&[1.0, 2.0], 0, 10, 10).unwrap();
        assert!(set.visible.is_empty());
    }

    #[test]
    fn out_of_range_and_zero_windows_error() {
        assert!(matches!(
            visible_oracle(&[1.0, 2.0], 2, 10),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(visible_oracle(&[1.0, 2.0], 1, 0).is_err());
        assert!(visible_fast(&[1.0, 2.0], 1, 1, 0).is_err());
    }

    #[test]
    fn works_for_f32() {
        let prices: Vec<f32> = vec![3.0, 1.0, 2.0];
        let set = visible_fast(&prices, 2, 10, 10).unwrap();
        assert_eq!(set.visible, vec![1, 0]);
    }

    /// Random walk on a dyadic lattice: exactly representable, so collinear
    /// configurations are decided identically by every formulation.
    fn lattice_walk() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-64i32..=64, 1..120).prop_map(|steps| {
            let mut p = 1024.0;
            let mut out = Vec::with_capacity(steps.len());
            for s in steps {
                p += s as f64 / 1024.0;
                out.push(p);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn fast_matches_oracle_with_cap_disabled(prices in lattice_walk(), w_v in 1usize..64) {
            for j in 0..prices.len() {
                let oracle = visible_oracle(&prices, j, w_v).unwrap();
                let fast = visible_fast(&prices, j, w_v, j.max(1)).unwrap();
                prop_assert_eq!(&oracle.visible, &fast.visible);
                prop_assert!(!fast.capped);
            }
        }

        #[test]
        fn fast_is_nearest_first_prefix_of_oracle(prices in lattice_walk(),
                                                  w_v in 1usize..64,
                                                  w_s in 1usize..16) {
            for j in 0..prices.len() {
                let oracle = visible_oracle(&prices, j, w_v).unwrap();
                let fast = visible_fast(&prices, j, w_v, w_s).unwrap();
                let take = oracle.visible.len().min(w_s);
                prop_assert_eq!(&fast.visible[..], &oracle.visible[..take]);
                prop_assert_eq!(fast.capped, oracle.visible.len() > w_s);
            }
        }

        #[test]
        fn set_respects_range_order_and_adjacency(prices in lattice_walk(),
                                                  w_v in 1usize..64,
                                                  w_s in 1usize..16) {
            for j in 0..prices.len() {
                let set = visible_fast(&prices, j, w_v, w_s).unwrap();
                for w in set.visible.windows(2) {
                    prop_assert!(w[0] > w[1], "must be nearest first");
                }
                for &i in &set.visible {
                    prop_assert!(i >= j.saturating_sub(w_v) && i < j);
                }
                prop_assert!(set.visible.len() <= w_s);
                if j >= 1 {
                    prop_assert_eq!(set.visible.first(), Some(&(j - 1)));
                }
            }
        }

        #[test]
        fn widening_lookback_never_removes_indices(prices in lattice_walk(),
                                                   w_v in 1usize..32) {
            for j in 0..prices.len() {
                let narrow = visible_oracle(&prices, j, w_v).unwrap();
                let wide = visible_oracle(&prices, j, w_v + 7).unwrap();
                for &i in &narrow.visible {
                    prop_assert!(wide.visible.contains(&i));
                }
            }
        }

        #[test]
        fn invariant_under_translation_and_dyadic_scaling(prices in lattice_walk(),
                                                          w_v in 1usize..32,
                                                          shift in -512i32..512,
                                                          scale_exp in -3i32..4) {
            let scale = (2.0f64).powi(scale_exp);
            let translated: Vec<f64> = prices.iter().map(|p| p + shift as f64).collect();
            let scaled: Vec<f64> = prices.iter().map(|p| p * scale).collect();
            for j in 0..prices.len() {
                let base = visible_fast(&prices, j, w_v, 8).unwrap();
                prop_assert_eq!(&base, &visible_fast(&translated, j, w_v, 8).unwrap());
                prop_assert_eq!(&base, &visible_fast(&scaled, j, w_v, 8).unwrap());
            }
        }
    }
}
