//! Single mean-shift split of the observation window into `I1 = [0, t1)` and
//! `I2 = [t1, T)`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_SIZE_I2: usize = 30;
const RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftCriterion {
    /// `mean(I2) - mean(I1)`.
    #[default]
    Signed,
    /// `|mean(I2)| - |mean(I1)|`.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub t1: usize,
    pub len: usize,
    pub mean_i1: f64,
    pub mean_i2: f64,
    /// Value of the criterion at `t1`.
    pub delta: f64,
    pub accepted: bool,
}

impl SplitResult {
    pub fn i1(&self) -> Range<usize> {
        0..self.t1
    }

    pub fn i2(&self) -> Range<usize> {
        self.t1..self.len
    }
}

/// Scans every `t1` in `1..=T - min_size_i2` and keeps the first maximizer of
/// the criterion. The split is accepted when the maximum exceeds `threshold_y`.
pub fn find_split(series: &[f64], min_size_i2: usize, threshold_y: f64) -> Result<SplitResult> {
    find_split_with(series, min_size_i2, threshold_y, ShiftCriterion::Signed)
}

pub fn find_split_with(
    series: &[f64],
    min_size_i2: usize,
    threshold_y: f64,
    criterion: ShiftCriterion,
) -> Result<SplitResult> {
    let len = series.len();
    if min_size_i2 == 0 || len < min_size_i2 + 2 {
        return Err(Error::SeriesTooShort {
            len,
            min_size: min_size_i2,
        });
    }
    let total: f64 = series.iter().sum();
    let mut prefix = 0.0;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for t1 in 1..=len - min_size_i2 {
        prefix += series[t1 - 1];
        let m1 = prefix / t1 as f64;
        let m2 = (total - prefix) / (len - t1) as f64;
        let delta = match criterion {
            ShiftCriterion::Signed => m2 - m1,
            ShiftCriterion::Absolute => m2.abs() - m1.abs(),
        };
        if best.is_none_or(|b| delta > b.3) {
            best = Some((t1, m1, m2, delta));
        }
    }
    let (t1, _, _, mut delta) = best.expect("at least one candidate split");
    // shifts below floating-point resolution of the data are no shift
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if delta.abs() <= RESOLUTION * scale {
        delta = 0.0;
    }
    // recompute the means directly so they do not carry prefix-sum drift
    let mean_i1 = mean(&series[..t1]);
    let mean_i2 = mean(&series[t1..]);
    Ok(SplitResult {
        t1,
        len,
        mean_i1,
        mean_i2,
        delta,
        accepted: delta > threshold_y,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `mean(series[i2]) - mean(series[i1])`.
pub fn mean_shift(series: &[f64], i1: Range<usize>, i2: Range<usize>) -> Result<f64> {
    if i1.is_empty() || i2.is_empty() || i1.end > series.len() || i2.end > series.len() {
        return Err(Error::EmptyRange);
    }
    if i1.end > i2.start {
        return Err(Error::InvalidConfig("ranges must be disjoint and ordered".into()));
    }
    Ok(mean(&series[i2]) - mean(&series[i1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Naive oracle: recomputes both means from scratch for every split.
    fn brute(series: &[f64], min_size: usize) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for t1 in 1..=series.len() - min_size {
            let d = mean(&series[t1..]) - mean(&series[..t1]);
            if d > best.1 {
                best = (t1, d);
            }
        }
        best
    }

    #[test]
    fn step_series() {
        let mut s = vec![0.0; 50];
        s.extend(vec![1.0; 50]);
        let split = find_split(&s, 30, 0.5).unwrap();
        assert_eq!(split.t1, 50);
        assert!((split.delta - 1.0).abs() < 1e-12);
        assert!(split.accepted);
        assert_eq!(split.i1(), 0..50);
        assert_eq!(split.i2(), 50..100);
    }

    #[test]
    fn constant_series_not_accepted() {
        let split = find_split(&[3.0; 40], 30, 0.0).unwrap();
        assert_eq!(split.delta, 0.0);
        assert_eq!(split.t1, 1);
        assert!(!split.accepted);
    }

    #[test]
    fn inexact_constant_not_accepted() {
        let split = find_split(&[0.1; 97], 30, 0.0).unwrap();
        assert_eq!(split.delta, 0.0);
        assert!(!split.accepted);
    }

    #[test]
    fn decreasing_ramp_not_accepted() {
        let s: Vec<f64> = (0..80).map(|i| -(i as f64)).collect();
        let split = find_split(&s, 30, 0.0).unwrap();
        assert!(split.delta < 0.0);
        assert!(!split.accepted);
    }

    #[test]
    fn too_short() {
        assert!(matches!(find_split(&[1.0; 31], 30, 0.0), Err(Error::SeriesTooShort { .. })));
        assert!(find_split(&[1.0; 32], 30, 0.0).is_ok());
    }

    #[test]
    fn absolute_criterion() {
        // means -2 then 1: signed rise, absolute fall
        let mut s = vec![-2.0; 40];
        s.extend(vec![1.0; 40]);
        assert!(find_split(&s, 30, 0.0).unwrap().accepted);
        let abs = find_split_with(&s, 30, 0.0, ShiftCriterion::Absolute).unwrap();
        assert!(abs.delta <= 0.0 || abs.t1 != 40);
    }

    #[test]
    fn mean_shift_cases() {
        assert_eq!(mean_shift(&[0.0, 0.0, 2.0, 2.0], 0..2, 2..4).unwrap(), 2.0);
        assert_eq!(mean_shift(&[1.0, 5.0, 1.0, 5.0], 0..2, 2..4).unwrap(), 0.0);
        assert_eq!(mean_shift(&[1.0, 4.0], 0..1, 1..2).unwrap(), 3.0);
        assert_eq!(mean_shift(&[1.0, 4.0], 0..0, 1..2).unwrap_err(), Error::EmptyRange);
    }

    proptest! {
        #[test]
        fn matches_brute_force(s in proptest::collection::vec(-10.0f64..10.0, 32..120)) {
            let split = find_split(&s, 30, 0.0).unwrap();
            let (t1, delta) = brute(&s, 30);
            prop_assert_eq!(split.t1, t1);
            prop_assert!((split.delta - delta).abs() < 1e-9);
        }

        #[test]
        fn shift_and_scale_equivariant(
            s in proptest::collection::vec(-10.0f64..10.0, 32..100),
            shift in -50.0f64..50.0,
            scale in 0.1f64..10.0,
        ) {
            let base = find_split(&s, 30, 0.0).unwrap();
            let shifted: Vec<f64> = s.iter().map(|v| v + shift).collect();
            let scaled: Vec<f64> = s.iter().map(|v| v * scale).collect();
            let a = find_split(&shifted, 30, 0.0).unwrap();
            let b = find_split(&scaled, 30, 0.0).unwrap();
            prop_assert!((a.delta - base.delta).abs() < 1e-9);
            prop_assert!((b.delta - scale * base.delta).abs() < 1e-9 * scale.max(1.0));
            // near-ties may flip under rounding; only compare clear winners
            let second = (1..=s.len() - 30)
                .filter(|&t| t != base.t1)
                .map(|t| mean(&s[t..]) - mean(&s[..t]))
                .fold(f64::NEG_INFINITY, f64::max);
            if base.delta - second > 1e-9 {
                prop_assert_eq!(a.t1, base.t1);
                prop_assert_eq!(b.t1, base.t1);
            }
        }
    }
}
