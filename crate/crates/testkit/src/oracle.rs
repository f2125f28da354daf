//! Brute-force kernel oracles: every output recomputed from its full window.

use trendalpha::kernels::Stat;

fn window(s: &[f64], t: usize, len: usize) -> Vec<f64> {
    let lo = (t + 1).saturating_sub(len);
    s[lo..=t].to_vec()
}

fn defined(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().filter(|x| x.is_finite()).collect()
}

pub fn delay(s: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; s.len()];
    for t in d..s.len() {
        out[t] = s[t - d];
    }
    out
}

pub fn delta(s: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; s.len()];
    for t in d..s.len() {
        out[t] = s[t] - s[t - d];
    }
    out
}

pub fn ts_stat(s: &[f64], len: usize, min_valid: usize, stat: Stat) -> Vec<f64> {
    (0..s.len())
        .map(|t| {
            let raw = window(s, t, len);
            let xs = defined(&raw);
            if xs.len() < min_valid {
                return f64::NAN;
            }
            let n = xs.len() as f64;
            match stat {
                Stat::Sum => xs.iter().sum(),
                Stat::Mean => xs.iter().sum::<f64>() / n,
                Stat::StdDev => {
                    if xs.len() < 2 {
                        return f64::NAN;
                    }
                    let m = xs.iter().sum::<f64>() / n;
                    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
                }
                Stat::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
                Stat::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Stat::ArgMax | Stat::ArgMin => {
                    // Offset 1 = most recent; scan newest to oldest, keep first strict best.
                    let mut best: Option<(f64, usize)> = None;
                    for (k, x) in raw.iter().rev().enumerate() {
                        if !x.is_finite() {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((b, _)) => {
                                if stat == Stat::ArgMax {
                                    *x > b
                                } else {
                                    *x < b
                                }
                            }
                        };
                        if better {
                            best = Some((*x, k + 1));
                        }
                    }
                    best.map_or(f64::NAN, |(_, k)| k as f64)
                }
                Stat::Product => xs.iter().product(),
            }
        })
        .collect()
}

pub fn ts_rank(s: &[f64], len: usize) -> Vec<f64> {
    (0..s.len())
        .map(|t| {
            let xs = window(s, t, len);
            if xs.len() < len || xs.iter().any(|x| !x.is_finite()) {
                return f64::NAN;
            }
            let cur = s[t];
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // average of the 1-based positions holding `cur`
            let positions: Vec<usize> = sorted
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == cur)
                .map(|(i, _)| i + 1)
                .collect();
            let rank = positions.iter().sum::<usize>() as f64 / positions.len() as f64;
            (rank - 1.0) / (len - 1) as f64
        })
        .collect()
}

fn pair_windows(x: &[f64], y: &[f64], t: usize, len: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let a = window(x, t, len);
    let b = window(y, t, len);
    if a.len() < len || a.iter().chain(&b).any(|v| !v.is_finite()) {
        return None;
    }
    Some((a, b))
}

pub fn rolling_cov(x: &[f64], y: &[f64], len: usize) -> Vec<f64> {
    (0..x.len())
        .map(|t| match pair_windows(x, y, t, len) {
            None => f64::NAN,
            Some((a, b)) => {
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                a.iter().zip(&b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / (n - 1.0)
            }
        })
        .collect()
}

pub fn rolling_corr(x: &[f64], y: &[f64], len: usize) -> Vec<f64> {
    (0..x.len())
        .map(|t| match pair_windows(x, y, t, len) {
            None => f64::NAN,
            Some((a, b)) => {
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let sab: f64 = a.iter().zip(&b).map(|(p, q)| (p - ma) * (q - mb)).sum();
                let saa: f64 = a.iter().map(|p| (p - ma) * (p - ma)).sum();
                let sbb: f64 = b.iter().map(|q| (q - mb) * (q - mb)).sum();
                let constant = |v: &[f64]| v.iter().all(|z| *z == v[0]);
                if constant(&a) || constant(&b) {
                    f64::NAN
                } else {
                    sab / (saa * sbb).sqrt()
                }
            }
        })
        .collect()
}

pub fn decay_linear(s: &[f64], len: usize) -> Vec<f64> {
    (0..s.len())
        .map(|t| {
            let xs = window(s, t, len);
            if xs.len() < len || xs.iter().any(|x| !x.is_finite()) {
                return f64::NAN;
            }
            // xs[0] oldest gets weight 1, xs[len-1] newest gets weight len
            let num: f64 = xs.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
            num / (len * (len + 1) / 2) as f64
        })
        .collect()
}

pub fn cs_rank(row: &[f64]) -> Vec<f64> {
    let vals: Vec<f64> = defined(row);
    let n = vals.len();
    row.iter()
        .map(|&v| {
            if !v.is_finite() || n < 2 {
                return f64::NAN;
            }
            let less = vals.iter().filter(|&&u| u < v).count() as f64;
            let equal = vals.iter().filter(|&&u| u == v).count() as f64;
            let rank = less + (equal + 1.0) / 2.0;
            (rank - 1.0) / (n - 1) as f64
        })
        .collect()
}

pub fn scale(s: &[f64], a: f64) -> Vec<f64> {
    let total: f64 = defined(s).iter().map(|x| x.abs()).sum();
    s.iter()
        .map(|x| if total == 0.0 { f64::NAN } else { x * a / total })
        .collect()
}

pub fn signedpower(s: &[f64], p: f64) -> Vec<f64> {
    s.iter()
        .map(|&x| {
            if x > 0.0 {
                x.powf(p)
            } else if x < 0.0 {
                -(-x).powf(p)
            } else {
                x * 0.0
            }
        })
        .collect()
}
