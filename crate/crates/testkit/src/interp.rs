//! Cell-at-a-time reference interpreter for alpha expressions.
//!
//! Each (instrument, date) value is computed straight from the definitions,
//! recursing into the child at whatever dates/instruments it needs. Results
//! are memoized per node, so the cost is O(nodes x cells x window).

use std::collections::HashMap;

use trendalpha::alpha::{AlphaExpr, BinOp};
use trendalpha::market_data::{Field, PricePanel};

pub struct Interpreter<'a> {
    panel: &'a PricePanel,
    memo: HashMap<(usize, usize, usize), f64>,
}

fn clean(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

fn window_len(arg: &AlphaExpr) -> usize {
    match arg {
        AlphaExpr::Literal(v) => v.floor() as usize,
        other => panic!("window must be literal, got {other:?}"),
    }
}

impl<'a> Interpreter<'a> {
    pub fn new(panel: &'a PricePanel) -> Self {
        Self {
            panel,
            memo: HashMap::new(),
        }
    }

    /// Values for every cell, instrument-major.
    pub fn run(&mut self, expr: &AlphaExpr) -> Vec<f64> {
        let (n_inst, n_dates) = (self.panel.n_tickers(), self.panel.n_dates());
        let mut out = Vec::with_capacity(n_inst * n_dates);
        for i in 0..n_inst {
            for t in 0..n_dates {
                out.push(self.at(expr, i, t));
            }
        }
        out
    }

    fn raw(&self, f: Field, i: usize, t: usize) -> f64 {
        self.panel.series(i, f)[t]
    }

    fn field(&self, name: &str, i: usize, t: usize) -> f64 {
        match name {
            "open" => self.raw(Field::Open, i, t),
            "high" => self.raw(Field::High, i, t),
            "low" => self.raw(Field::Low, i, t),
            "close" => self.raw(Field::Close, i, t),
            "adj_close" => self.raw(Field::AdjClose, i, t),
            "volume" => self.raw(Field::Volume, i, t),
            "returns" => {
                if t == 0 {
                    f64::NAN
                } else {
                    self.raw(Field::Close, i, t) / self.raw(Field::Close, i, t - 1) - 1.0
                }
            }
            "vwap" => (self.raw(Field::High, i, t) + self.raw(Field::Low, i, t) + self.raw(Field::Close, i, t)) / 3.0,
            adv => {
                let n: usize = adv.strip_prefix("adv").and_then(|s| s.parse().ok()).expect("known field");
                if t + 1 < n {
                    return f64::NAN;
                }
                let xs: Vec<f64> = (t + 1 - n..=t).map(|k| self.raw(Field::Volume, i, k)).collect();
                if xs.iter().any(|x| !x.is_finite()) {
                    f64::NAN
                } else {
                    xs.iter().sum::<f64>() / n as f64
                }
            }
        }
    }

    /// Child values over the trailing window ending at `t`, oldest first;
    /// `None` if the window is incomplete or holds an undefined value.
    fn window(&mut self, e: &AlphaExpr, i: usize, t: usize, len: usize) -> Option<Vec<f64>> {
        if t + 1 < len {
            return None;
        }
        let xs: Vec<f64> = (t + 1 - len..=t).map(|k| self.at(e, i, k)).collect();
        xs.iter().all(|x| x.is_finite()).then_some(xs)
    }

    pub fn at(&mut self, expr: &AlphaExpr, i: usize, t: usize) -> f64 {
        let key = (expr as *const AlphaExpr as usize, i, t);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = clean(self.compute(expr, i, t));
        self.memo.insert(key, v);
        v
    }

    fn compute(&mut self, expr: &AlphaExpr, i: usize, t: usize) -> f64 {
        match expr {
            AlphaExpr::Literal(v) => *v,
            AlphaExpr::Field(name) => self.field(name, i, t),
            AlphaExpr::Neg(e) => -self.at(e, i, t),
            AlphaExpr::Binary { op, lhs, rhs } => {
                let a = self.at(lhs, i, t);
                let b = self.at(rhs, i, t);
                if a.is_nan() || b.is_nan() {
                    return f64::NAN;
                }
                let ind = |c: bool| if c { 1.0 } else { 0.0 };
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                    BinOp::Lt => ind(a < b),
                    BinOp::Le => ind(a <= b),
                    BinOp::Gt => ind(a > b),
                    BinOp::Ge => ind(a >= b),
                    BinOp::Eq => ind(a == b),
                    BinOp::Ne => ind(a != b),
                }
            }
            AlphaExpr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                let c = self.at(cond, i, t);
                let a = self.at(then, i, t);
                let b = self.at(otherwise, i, t);
                if c.is_nan() {
                    f64::NAN
                } else if c != 0.0 {
                    a
                } else {
                    b
                }
            }
            AlphaExpr::Call { name, args } => self.call(name, args, i, t),
        }
    }

    fn call(&mut self, name: &str, args: &[AlphaExpr], i: usize, t: usize) -> f64 {
        let nan = f64::NAN;
        match name {
            "delay" | "delta" => {
                let d = window_len(&args[1]);
                if t < d {
                    return nan;
                }
                let past = self.at(&args[0], i, t - d);
                if name == "delay" {
                    past
                } else {
                    self.at(&args[0], i, t) - past
                }
            }
            "ts_sum" | "sum" | "ts_mean" | "ts_stddev" | "stddev" | "ts_min" | "ts_max" | "ts_argmax"
            | "ts_argmin" | "ts_product" | "product" | "decay_linear" | "ts_rank" => {
                let len = window_len(&args[1]);
                let Some(xs) = self.window(&args[0], i, t, len) else {
                    return nan;
                };
                let n = len as f64;
                match name {
                    "ts_sum" | "sum" => xs.iter().sum(),
                    "ts_mean" => xs.iter().sum::<f64>() / n,
                    "ts_stddev" | "stddev" => {
                        let m = xs.iter().sum::<f64>() / n;
                        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    }
                    "ts_min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
                    "ts_max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    "ts_argmax" | "ts_argmin" => {
                        let newest_first: Vec<f64> = xs.iter().rev().copied().collect();
                        let mut best = 0;
                        for k in 1..newest_first.len() {
                            let better = if name == "ts_argmax" {
                                newest_first[k] > newest_first[best]
                            } else {
                                newest_first[k] < newest_first[best]
                            };
                            if better {
                                best = k;
                            }
                        }
                        (best + 1) as f64
                    }
                    "ts_product" | "product" => xs.iter().product(),
                    "decay_linear" => {
                        let num: f64 = xs.iter().enumerate().map(|(k, x)| (k + 1) as f64 * x).sum();
                        num / (n * (n + 1.0) / 2.0)
                    }
                    _ => {
                        let cur = xs[len - 1];
                        let less = xs.iter().filter(|&&x| x < cur).count() as f64;
                        let eq = xs.iter().filter(|&&x| x == cur).count() as f64;
                        (less + (eq + 1.0) / 2.0 - 1.0) / (n - 1.0)
                    }
                }
            }
            "correlation" | "covariance" => {
                let len = window_len(&args[2]);
                let (Some(a), Some(b)) = (self.window(&args[0], i, t, len), self.window(&args[1], i, t, len)) else {
                    return nan;
                };
                let n = len as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let sab: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
                if name == "covariance" {
                    return sab / (n - 1.0);
                }
                let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
                if constant(&a) || constant(&b) {
                    return nan;
                }
                if len == 2 {
                    return ((a[1] - a[0]) * (b[1] - b[0])).signum();
                }
                let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
                let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
                (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
            }
            "rank" => {
                let row: Vec<f64> = (0..self.panel.n_tickers()).map(|k| self.at(&args[0], k, t)).collect();
                let me = row[i];
                let defined: Vec<f64> = row.into_iter().filter(|x| x.is_finite()).collect();
                if !me.is_finite() || defined.len() < 2 {
                    return nan;
                }
                let less = defined.iter().filter(|&&x| x < me).count() as f64;
                let eq = defined.iter().filter(|&&x| x == me).count() as f64;
                (less + (eq + 1.0) / 2.0 - 1.0) / (defined.len() - 1) as f64
            }
            "scale" => {
                let a = match args.get(1) {
                    Some(AlphaExpr::Literal(a)) => *a,
                    _ => 1.0,
                };
                let row: Vec<f64> = (0..self.panel.n_tickers()).map(|k| self.at(&args[0], k, t)).collect();
                let total: f64 = row.iter().filter(|x| x.is_finite()).map(|x| x.abs()).sum();
                if total == 0.0 {
                    nan
                } else {
                    row[i] * a / total
                }
            }
            "signedpower" => {
                let x = self.at(&args[0], i, t);
                let p = self.at(&args[1], i, t);
                if x.is_nan() || p.is_nan() {
                    nan
                } else if x == 0.0 {
                    0.0
                } else if x > 0.0 {
                    x.powf(p)
                } else {
                    -(-x).powf(p)
                }
            }
            "log" => self.at(&args[0], i, t).ln(),
            "abs" => self.at(&args[0], i, t).abs(),
            "sign" => {
                let x = self.at(&args[0], i, t);
                if x.is_nan() {
                    nan
                } else if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            "min" | "max" => {
                let a = self.at(&args[0], i, t);
                let b = self.at(&args[1], i, t);
                if a.is_nan() || b.is_nan() {
                    nan
                } else if name == "min" {
                    a.min(b)
                } else {
                    a.max(b)
                }
            }
            other => panic!("interpreter does not know `{other}`"),
        }
    }
}
