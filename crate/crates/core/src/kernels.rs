//! Rolling-window and cross-sectional kernels.
//!
//! Series are `&[f64]` with `NaN` meaning "undefined". Every kernel is
//! causal: `out[t]` reads only `s[..=t]`. A window emits a value only when it
//! holds at least `min_valid` defined observations; statistics are computed
//! over the defined observations in the window.

use crate::error::{Error, Result};

/// Recompute running sums from scratch after this many slides.
pub const REBASELINE_INTERVAL: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    length: usize,
    min_valid: usize,
}

impl WindowSpec {
    /// Full-window spec: `min_valid == length`.
    pub fn new(length: usize) -> Result<Self> {
        Self::with_min_valid(length, length)
    }

    pub fn with_min_valid(length: usize, min_valid: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::param("window length must be at least 1"));
        }
        if min_valid == 0 || min_valid > length {
            return Err(Error::param(format!(
                "min_valid must lie in 1..={length}, got {min_valid}"
            )));
        }
        Ok(Self { length, min_valid })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn min_valid(&self) -> usize {
        self.min_valid
    }
}

/// A strictly positive lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lag(usize);

impl Lag {
    pub fn new(days: usize) -> Result<Self> {
        if days == 0 {
            return Err(Error::param("lag must be at least 1"));
        }
        Ok(Self(days))
    }

    pub fn days(&self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Sum,
    Mean,
    StdDev,
    Min,
    Max,
    ArgMax,
    ArgMin,
    Product,
}

/// `out[t] = s[t - d]`.
pub fn delay(s: &[f64], lag: Lag) -> Vec<f64> {
    let d = lag.days();
    (0..s.len())
        .map(|t| if t >= d { s[t - d] } else { f64::NAN })
        .collect()
}

/// `out[t] = s[t] - s[t - d]`.
pub fn delta(s: &[f64], lag: Lag) -> Vec<f64> {
    let d = lag.days();
    (0..s.len())
        .map(|t| if t >= d { s[t] - s[t - d] } else { f64::NAN })
        .collect()
}

pub fn ts_stat(s: &[f64], w: WindowSpec, stat: Stat) -> Vec<f64> {
    match stat {
        Stat::Sum => rolling_sum(s, w, false),
        Stat::Mean => rolling_sum(s, w, true),
        Stat::StdDev => rolling_stddev(s, w),
        Stat::Min => rolling_extreme(s, w, Extreme::Min, false),
        Stat::Max => rolling_extreme(s, w, Extreme::Max, false),
        Stat::ArgMin => rolling_extreme(s, w, Extreme::Min, true),
        Stat::ArgMax => rolling_extreme(s, w, Extreme::Max, true),
        Stat::Product => rolling_product(s, w),
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn window_start(t: usize, length: usize) -> usize {
    (t + 1).saturating_sub(length)
}

fn rolling_sum(s: &[f64], w: WindowSpec, mean: bool) -> Vec<f64> {
    let len = w.length();
    let mut out = vec![f64::NAN; s.len()];
    let mut acc = CompensatedSum::default();
    let mut count = 0usize;
    let mut slides = 0usize;
    for t in 0..s.len() {
        if s[t].is_finite() {
            acc.add(s[t]);
            count += 1;
        }
        if t >= len {
            let old = s[t - len];
            if old.is_finite() {
                acc.add(-old);
                count -= 1;
            }
            slides += 1;
            if slides.is_multiple_of(REBASELINE_INTERVAL) {
                acc = CompensatedSum::default();
                for &x in s[window_start(t, len)..=t].iter().filter(|x| x.is_finite()) {
                    acc.add(x);
                }
            }
        }
        if count >= w.min_valid() {
            let total = acc.value();
            out[t] = if mean { total / count as f64 } else { total };
        }
    }
    out
}

/// Shifted, compensated power sums `S1 = sum(x - K)`, `S2 = sum((x - K)^2)`.
/// The shift `K` is re-anchored to the newest observation whenever the
/// window mean strays far from it relative to the window spread, and the
/// sums are recomputed every [`REBASELINE_INTERVAL`] slides.
fn rolling_stddev(s: &[f64], w: WindowSpec) -> Vec<f64> {
    const MAX_SHIFT_RATIO: f64 = 1e3;
    let len = w.length();
    let mut out = vec![f64::NAN; s.len()];
    let mut shift = 0.0;
    let mut s1 = CompensatedSum::default();
    let mut s2 = CompensatedSum::default();
    let mut count = 0usize;
    let mut slides = 0usize;

    let recompute = |window: &[f64], shift: f64| {
        let mut a = CompensatedSum::default();
        let mut b = CompensatedSum::default();
        for &x in window.iter().filter(|x| x.is_finite()) {
            a.add(x - shift);
            b.add((x - shift) * (x - shift));
        }
        (a, b)
    };

    for t in 0..s.len() {
        let x = s[t];
        if x.is_finite() {
            if count == 0 {
                shift = x;
            }
            count += 1;
            s1.add(x - shift);
            s2.add((x - shift) * (x - shift));
        }
        if t >= len {
            let old = s[t - len];
            if old.is_finite() {
                count -= 1;
                s1.add(-(old - shift));
                s2.add(-((old - shift) * (old - shift)));
            }
            slides += 1;
            if slides.is_multiple_of(REBASELINE_INTERVAL) {
                (s1, s2) = recompute(&s[window_start(t, len)..=t], shift);
            }
        }
        if count == 0 {
            s1 = CompensatedSum::default();
            s2 = CompensatedSum::default();
            continue;
        }
        let n = count as f64;
        let mut mean_c = s1.value() / n;
        let mut m2 = s2.value() - s1.value() * mean_c;
        if mean_c * mean_c > MAX_SHIFT_RATIO * (m2.max(0.0) / n) && x.is_finite() && x != shift {
            shift = x;
            (s1, s2) = recompute(&s[window_start(t, len)..=t], shift);
            mean_c = s1.value() / n;
            m2 = s2.value() - s1.value() * mean_c;
        }
        if count >= w.min_valid() && count >= 2 {
            out[t] = (m2.max(0.0) / (n - 1.0)).sqrt();
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Extreme {
    Min,
    Max,
}

/// Monotonic-deque min/max. For `arg`, returns the 1-based offset from the
/// most recent observation; among tied extremes the most recent wins.
fn rolling_extreme(s: &[f64], w: WindowSpec, which: Extreme, arg: bool) -> Vec<f64> {
    let len = w.length();
    let mut out = vec![f64::NAN; s.len()];
    let mut deque = std::collections::VecDeque::<usize>::new();
    let mut count = 0usize;
    let dominated = |old: f64, new: f64| match which {
        Extreme::Max => old <= new,
        Extreme::Min => old >= new,
    };
    for t in 0..s.len() {
        if s[t].is_finite() {
            count += 1;
            while deque.back().is_some_and(|&i| dominated(s[i], s[t])) {
                deque.pop_back();
            }
            deque.push_back(t);
        }
        if t >= len {
            if s[t - len].is_finite() {
                count -= 1;
            }
            while deque.front().is_some_and(|&i| i + len <= t) {
                deque.pop_front();
            }
        }
        if count >= w.min_valid() {
            if let Some(&i) = deque.front() {
                out[t] = if arg { (t - i + 1) as f64 } else { s[i] };
            }
        }
    }
    out
}

fn rolling_product(s: &[f64], w: WindowSpec) -> Vec<f64> {
    let len = w.length();
    (0..s.len())
        .map(|t| {
            let window = &s[window_start(t, len)..=t];
            let defined = window.iter().filter(|x| x.is_finite());
            if defined.clone().count() >= w.min_valid() {
                defined.product()
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Rank of `s[t]` in its trailing window, ties averaged, scaled to `[0, 1]`.
pub fn ts_rank(s: &[f64], w: WindowSpec) -> Vec<f64> {
    let len = w.length();
    (0..s.len())
        .map(|t| {
            let cur = s[t];
            if !cur.is_finite() {
                return f64::NAN;
            }
            let (mut n, mut less, mut equal) = (0usize, 0usize, 0usize);
            for &x in s[window_start(t, len)..=t].iter().filter(|x| x.is_finite()) {
                n += 1;
                if x < cur {
                    less += 1;
                } else if x == cur {
                    equal += 1;
                }
            }
            if n < w.min_valid() || n < 2 {
                return f64::NAN;
            }
            let rank = less as f64 + (equal as f64 + 1.0) / 2.0;
            (rank - 1.0) / (n - 1) as f64
        })
        .collect()
}

/// Pairwise-complete window moments: `(n, cov_sum, var_x_sum, var_y_sum,
/// x_constant, y_constant)` by two passes.
fn window_comoments(x: &[f64], y: &[f64]) -> Option<(usize, f64, f64, f64, bool, bool)> {
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut x0, mut y0) = (f64::NAN, f64::NAN);
    let (mut x_const, mut y_const) = (true, true);
    for (&a, &b) in x.iter().zip(y) {
        if a.is_finite() && b.is_finite() {
            if n == 0 {
                x0 = a;
                y0 = b;
            }
            x_const &= a == x0;
            y_const &= b == y0;
            n += 1;
            sx += a;
            sy += b;
        }
    }
    if n == 0 {
        return None;
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        if a.is_finite() && b.is_finite() {
            let (da, db) = (a - mx, b - my);
            cxy += da * db;
            cxx += da * da;
            cyy += db * db;
        }
    }
    Some((n, cxy, cxx, cyy, x_const, y_const))
}

/// Sample covariance over aligned trailing windows.
pub fn rolling_cov(x: &[f64], y: &[f64], w: WindowSpec) -> Vec<f64> {
    rolling_pair(x, y, w, |n, cxy, _, _, _, _| cxy / (n - 1) as f64)
}

/// Pearson correlation over aligned trailing windows; undefined when either
/// window is constant.
pub fn rolling_corr(x: &[f64], y: &[f64], w: WindowSpec) -> Vec<f64> {
    rolling_pair(x, y, w, |n, cxy, cxx, cyy, xc, yc| {
        if xc || yc || cxx <= 0.0 || cyy <= 0.0 {
            f64::NAN
        } else if n == 2 {
            // Two points are always perfectly (anti)correlated; avoid
            // returning 1 - ulp, which would split ties in a later rank.
            cxy.signum()
        } else {
            (cxy / (cxx.sqrt() * cyy.sqrt())).clamp(-1.0, 1.0)
        }
    })
}

fn rolling_pair(
    x: &[f64],
    y: &[f64],
    w: WindowSpec,
    finish: impl Fn(usize, f64, f64, f64, bool, bool) -> f64,
) -> Vec<f64> {
    let len = w.length();
    let n = x.len().min(y.len());
    (0..n)
        .map(|t| {
            let lo = window_start(t, len);
            match window_comoments(&x[lo..=t], &y[lo..=t]) {
                Some((k, cxy, cxx, cyy, xc, yc)) if k >= w.min_valid() && k >= 2 => {
                    finish(k, cxy, cxx, cyy, xc, yc)
                }
                _ => f64::NAN,
            }
        })
        .collect()
}

/// Linearly decaying weighted mean: weights `w, w-1, ..., 1` with the most
/// recent observation heaviest, normalized by the weights present.
pub fn decay_linear(s: &[f64], w: WindowSpec) -> Vec<f64> {
    let len = w.length();
    (0..s.len())
        .map(|t| {
            let (mut num, mut den, mut n) = (0.0, 0.0, 0usize);
            for k in 0..len.min(t + 1) {
                let x = s[t - k];
                if x.is_finite() {
                    let weight = (len - k) as f64;
                    num += weight * x;
                    den += weight;
                    n += 1;
                }
            }
            if n >= w.min_valid() {
                num / den
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Fractional cross-sectional rank `(rank - 1) / (n - 1)`, ties averaged;
/// undefined entries are skipped and stay undefined.
pub fn cs_rank(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&i| row[i].is_finite()).collect();
    let mut out = vec![f64::NAN; row.len()];
    let n = order.len();
    if n < 2 {
        return out;
    }
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their average.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = (avg - 1.0) / (n - 1) as f64;
        }
        i = j + 1;
    }
    out
}

/// `s * a / sum(|s|)` over the defined entries. A zero absolute sum leaves
/// everything undefined.
pub fn scale(s: &[f64], a: f64) -> Vec<f64> {
    let total: f64 = s.iter().filter(|x| x.is_finite()).map(|x| x.abs()).sum();
    if total == 0.0 {
        log::warn!("scale: zero absolute sum, result undefined");
        return vec![f64::NAN; s.len()];
    }
    s.iter().map(|x| x * a / total).collect()
}

pub fn signedpower(s: &[f64], p: f64) -> Vec<f64> {
    s.iter().map(|&x| signed_pow(x, p)).collect()
}

pub(crate) fn signed_pow(x: f64, p: f64) -> f64 {
    if x.is_nan() || p.is_nan() {
        f64::NAN
    } else if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: f64 = f64::NAN;

    fn full(n: usize) -> WindowSpec {
        WindowSpec::new(n).unwrap()
    }

    fn assert_series(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            if e.is_nan() {
                assert!(a.is_nan(), "{actual:?} vs {expected:?}");
            } else {
                assert!((a - e).abs() < 1e-12, "{actual:?} vs {expected:?}");
            }
        }
    }

    #[test]
    fn delay_and_delta() {
        assert_series(&delay(&[1.0, 2.0, 3.0], Lag::new(1).unwrap()), &[U, 1.0, 2.0]);
        assert_series(&delta(&[100.0, 101.0, 103.0], Lag::new(1).unwrap()), &[U, 1.0, 2.0]);
        assert!(Lag::new(0).is_err());
        assert_series(&delta(&[5.0; 6], Lag::new(2).unwrap()), &[U, U, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn window_spec_bounds() {
        assert!(WindowSpec::new(0).is_err());
        assert!(WindowSpec::with_min_valid(3, 4).is_err());
        assert!(WindowSpec::with_min_valid(3, 0).is_err());
        assert!(WindowSpec::with_min_valid(3, 2).is_ok());
    }

    #[test]
    fn stat_examples() {
        assert_eq!(ts_stat(&[1.0, 2.0, 3.0], full(3), Stat::Max)[2], 3.0);
        assert_eq!(ts_stat(&[3.0, 1.0, 2.0], full(3), Stat::ArgMax)[2], 3.0);
        assert_eq!(ts_stat(&[3.0, 1.0, 2.0], full(3), Stat::ArgMin)[2], 2.0);
        let sd = ts_stat(&[1.0, 2.0, 3.0], full(3), Stat::StdDev);
        assert_series(&sd, &[U, U, 1.0]);
    }

    #[test]
    fn argmax_ties_take_most_recent() {
        assert_eq!(ts_stat(&[5.0, 1.0, 5.0, 2.0], full(4), Stat::ArgMax)[3], 2.0);
    }

    #[test]
    fn ts_rank_examples() {
        assert_eq!(ts_rank(&[3.0, 1.0, 2.0], full(3))[2], 0.5);
        let up: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(ts_rank(&up, full(4))[3..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn corr_examples() {
        let c = rolling_corr(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], full(3));
        assert!((c[2] + 1.0).abs() < 1e-15);
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        assert!(rolling_corr(&x, &x, full(3))[2..].iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(rolling_corr(&[0.1; 4], &x[..4], full(3))[3].is_nan());
    }

    #[test]
    fn decay_linear_examples() {
        assert_eq!(decay_linear(&[1.0, 1.0, 1.0], full(3))[2], 1.0);
        assert!((decay_linear(&[1.0, 2.0, 3.0], full(3))[2] - 14.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn cs_rank_examples() {
        assert_eq!(cs_rank(&[10.0, 30.0, 20.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(cs_rank(&[7.0; 4]), vec![0.5; 4]);
        assert_series(&cs_rank(&[1.0, U, 3.0]), &[0.0, U, 1.0]);
    }

    #[test]
    fn scale_and_signedpower() {
        assert_eq!(scale(&[1.0, -1.0, 2.0], 1.0), vec![0.25, -0.25, 0.5]);
        assert!(scale(&[0.0, 0.0], 1.0).iter().all(|v| v.is_nan()));
        assert_eq!(signedpower(&[-2.0], 2.0), vec![-4.0]);
        assert_eq!(signedpower(&[0.0], 0.5), vec![0.0]);
    }

    #[test]
    fn min_valid_partial_windows() {
        let w = WindowSpec::with_min_valid(3, 2).unwrap();
        assert_series(&ts_stat(&[1.0, 3.0, U, 5.0], w, Stat::Mean), &[U, 2.0, 2.0, 4.0]);
        assert_series(&ts_stat(&[1.0, U, U, 5.0], w, Stat::Sum), &[U, U, U, U]);
    }
}
