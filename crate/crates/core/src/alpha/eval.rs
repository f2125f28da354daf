//! Vectorized evaluation of an [`AlphaExpr`] over a [`PricePanel`].
//!
//! Every intermediate is either a scalar or a full instruments x dates grid.
//! Undefined cells are `NaN` and propagate through arithmetic; non-finite
//! arithmetic results (division by zero, `log(0)`) become undefined.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::ast::AlphaExpr;
use super::functions::{self, Op};
use super::shape::{shape_check, FieldRef, ShapeContext};
use crate::error::{Error, Result};
use crate::kernels::{self, Lag, Stat, WindowSpec};
use crate::market_data::{Field, PricePanel};

/// Dense instruments x dates matrix, instrument-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub instruments: usize,
    pub dates: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn row(&self, instrument: usize) -> &[f64] {
        &self.values[instrument * self.dates..(instrument + 1) * self.dates]
    }

    pub fn get(&self, instrument: usize, t: usize) -> f64 {
        self.values[instrument * self.dates + t]
    }

    /// Per-date mean over the defined instruments.
    pub fn cross_sectional_mean(&self) -> Vec<f64> {
        (0..self.dates)
            .map(|t| {
                let (sum, n) = (0..self.instruments)
                    .map(|k| self.get(k, t))
                    .filter(|v| v.is_finite())
                    .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    f64::NAN
                } else {
                    sum / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseSource {
    #[default]
    Close,
    AdjClose,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Which raw column the `close` identifier (and `returns`, `vwap`) reads.
    pub close_source: CloseSource,
}

pub fn evaluate(expr: &AlphaExpr, panel: &PricePanel) -> Result<Grid> {
    evaluate_with(expr, panel, EvalOptions::default())
}

pub fn evaluate_with(expr: &AlphaExpr, panel: &PricePanel, options: EvalOptions) -> Result<Grid> {
    shape_check(expr, &ShapeContext::new(panel.n_tickers()))?;
    let ev = Evaluator {
        panel,
        options,
        rows: panel.n_tickers(),
        cols: panel.n_dates(),
    };
    let values = match ev.eval(expr)? {
        Value::Scalar(v) => vec![finite_or_nan(v); ev.rows * ev.cols],
        Value::Grid(g) => g.into_owned(),
    };
    Ok(Grid {
        instruments: ev.rows,
        dates: ev.cols,
        values,
    })
}

enum Value<'p> {
    Scalar(f64),
    Grid(Cow<'p, [f64]>),
}

struct Evaluator<'p> {
    panel: &'p PricePanel,
    options: EvalOptions,
    rows: usize,
    cols: usize,
}

fn finite_or_nan(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

impl<'p> Evaluator<'p> {
    fn eval(&self, expr: &AlphaExpr) -> Result<Value<'p>> {
        Ok(match expr {
            AlphaExpr::Literal(v) => Value::Scalar(*v),
            AlphaExpr::Field(name) => {
                let field = FieldRef::resolve(name).ok_or_else(|| Error::Shape(format!("unknown identifier `{name}`")))?;
                Value::Grid(self.field(field))
            }
            AlphaExpr::Neg(inner) => map(self.eval(inner)?, |x| -x),
            AlphaExpr::Binary { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                zip(a, b, |x, y| op.apply(x, y))
            }
            AlphaExpr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                let c = self.eval(cond)?;
                let a = self.eval(then)?;
                let b = self.eval(otherwise)?;
                self.select(c, a, b)
            }
            AlphaExpr::Call { name, args } => self.call(name, args)?,
        })
    }

    fn close_field(&self) -> Field {
        match self.options.close_source {
            CloseSource::Close => Field::Close,
            CloseSource::AdjClose => Field::AdjClose,
        }
    }

    fn field(&self, field: FieldRef) -> Cow<'p, [f64]> {
        let raw = |f: Field| self.panel.field_matrix(f);
        match field {
            FieldRef::Raw(Field::Close) => Cow::Borrowed(raw(self.close_field())),
            FieldRef::Raw(f) => Cow::Borrowed(raw(f)),
            FieldRef::Returns => {
                let close = raw(self.close_field());
                let mut out = vec![f64::NAN; close.len()];
                for k in 0..self.rows {
                    let base = k * self.cols;
                    for t in 1..self.cols {
                        out[base + t] = finite_or_nan(close[base + t] / close[base + t - 1] - 1.0);
                    }
                }
                Cow::Owned(out)
            }
            FieldRef::Vwap => {
                let (h, l, c) = (raw(Field::High), raw(Field::Low), raw(self.close_field()));
                Cow::Owned(
                    h.iter()
                        .zip(l)
                        .zip(c)
                        .map(|((h, l), c)| (h + l + c) / 3.0)
                        .collect(),
                )
            }
            FieldRef::Adv(n) => {
                let spec = WindowSpec::new(n).expect("adv window validated at resolve");
                Cow::Owned(self.per_row(raw(Field::Volume), |s| kernels::ts_stat(s, spec, Stat::Mean)))
            }
        }
    }

    fn per_row(&self, grid: &[f64], f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        for row in grid.chunks(self.cols.max(1)) {
            out.extend(f(row));
        }
        out
    }

    fn per_row_pair(&self, a: &[f64], b: &[f64], f: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(a.len());
        for (ra, rb) in a.chunks(self.cols.max(1)).zip(b.chunks(self.cols.max(1))) {
            out.extend(f(ra, rb));
        }
        out
    }

    fn per_date(&self, grid: &[f64], f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut out = vec![f64::NAN; grid.len()];
        let mut column = vec![0.0; self.rows];
        for t in 0..self.cols {
            for (k, slot) in column.iter_mut().enumerate() {
                *slot = grid[k * self.cols + t];
            }
            for (k, v) in f(&column).into_iter().enumerate() {
                out[k * self.cols + t] = v;
            }
        }
        out
    }

    fn grid(&self, v: Value<'p>) -> Cow<'p, [f64]> {
        match v {
            Value::Grid(g) => g,
            Value::Scalar(s) => Cow::Owned(vec![finite_or_nan(s); self.rows * self.cols]),
        }
    }

    fn select(&self, c: Value<'p>, a: Value<'p>, b: Value<'p>) -> Value<'p> {
        let pick = |c: f64, a: f64, b: f64| {
            if c.is_nan() {
                f64::NAN
            } else if c != 0.0 {
                a
            } else {
                b
            }
        };
        if let (Value::Scalar(c), Value::Scalar(a), Value::Scalar(b)) = (&c, &a, &b) {
            return Value::Scalar(pick(*c, *a, *b));
        }
        let n = self.rows * self.cols;
        let at = |v: &Value<'p>, i: usize| match v {
            Value::Scalar(s) => *s,
            Value::Grid(g) => g[i],
        };
        Value::Grid(Cow::Owned((0..n).map(|i| pick(at(&c, i), at(&a, i), at(&b, i))).collect()))
    }

    fn window(&self, arg: &AlphaExpr) -> Result<usize> {
        match arg {
            AlphaExpr::Literal(v) => functions::window_value(*v).ok_or_else(|| Error::param(format!("bad window {v}"))),
            _ => Err(Error::param("window must be a numeric literal")),
        }
    }

    fn call(&self, name: &str, args: &[AlphaExpr]) -> Result<Value<'p>> {
        let sig = functions::lookup(name).ok_or_else(|| Error::Shape(format!("unknown function `{name}`")))?;
        let window_spec = |i: usize| -> Result<WindowSpec> {
            let w = self.window(&args[i])?;
            if w > self.cols {
                log::warn!("{name}: window {w} exceeds the {} available dates; result is undefined", self.cols);
            }
            WindowSpec::new(w)
        };
        let value = match sig.op {
            Op::Delay | Op::Delta => {
                let x = self.grid(self.eval(&args[0])?);
                let lag = Lag::new(self.window(&args[1])?)?;
                let f = if sig.op == Op::Delay { kernels::delay } else { kernels::delta };
                Value::Grid(Cow::Owned(self.per_row(&x, |s| f(s, lag))))
            }
            Op::Stat(stat) => {
                let x = self.grid(self.eval(&args[0])?);
                let w = window_spec(1)?;
                Value::Grid(Cow::Owned(self.per_row(&x, |s| kernels::ts_stat(s, w, stat))))
            }
            Op::TsRank => {
                let x = self.grid(self.eval(&args[0])?);
                let w = window_spec(1)?;
                Value::Grid(Cow::Owned(self.per_row(&x, |s| kernels::ts_rank(s, w))))
            }
            Op::DecayLinear => {
                let x = self.grid(self.eval(&args[0])?);
                let w = window_spec(1)?;
                Value::Grid(Cow::Owned(self.per_row(&x, |s| kernels::decay_linear(s, w))))
            }
            Op::Correlation | Op::Covariance => {
                let a = self.grid(self.eval(&args[0])?);
                let b = self.grid(self.eval(&args[1])?);
                let w = window_spec(2)?;
                let f = if sig.op == Op::Correlation { kernels::rolling_corr } else { kernels::rolling_cov };
                Value::Grid(Cow::Owned(self.per_row_pair(&a, &b, |x, y| f(x, y, w))))
            }
            Op::Rank => {
                let x = self.grid(self.eval(&args[0])?);
                Value::Grid(Cow::Owned(self.per_date(&x, kernels::cs_rank)))
            }
            Op::Scale => {
                let x = self.grid(self.eval(&args[0])?);
                let a = match args.get(1) {
                    Some(AlphaExpr::Literal(a)) => *a,
                    _ => 1.0,
                };
                Value::Grid(Cow::Owned(self.per_date(&x, |row| kernels::scale(row, a))))
            }
            Op::SignedPower => {
                let (x, p) = (self.eval(&args[0])?, self.eval(&args[1])?);
                zip(x, p, kernels::signed_pow)
            }
            Op::Log => map(self.eval(&args[0])?, f64::ln),
            Op::Abs => map(self.eval(&args[0])?, f64::abs),
            Op::Sign => map(self.eval(&args[0])?, sign),
            Op::Min => zip(self.eval(&args[0])?, self.eval(&args[1])?, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) }),
            Op::Max => zip(self.eval(&args[0])?, self.eval(&args[1])?, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) }),
        };
        Ok(value)
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else if x == 0.0 {
        0.0
    } else {
        f64::NAN
    }
}

fn map<'p>(v: Value<'p>, f: impl Fn(f64) -> f64) -> Value<'p> {
    match v {
        Value::Scalar(s) => Value::Scalar(finite_or_nan(f(s))),
        Value::Grid(g) => {
            let mut owned = g.into_owned();
            for x in owned.iter_mut() {
                *x = finite_or_nan(f(*x));
            }
            Value::Grid(Cow::Owned(owned))
        }
    }
}

fn zip<'p>(a: Value<'p>, b: Value<'p>, f: impl Fn(f64, f64) -> f64) -> Value<'p> {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(finite_or_nan(f(x, y))),
        (Value::Grid(g), Value::Scalar(y)) => {
            let mut owned = g.into_owned();
            for x in owned.iter_mut() {
                *x = finite_or_nan(f(*x, y));
            }
            Value::Grid(Cow::Owned(owned))
        }
        (Value::Scalar(x), Value::Grid(g)) => {
            let mut owned = g.into_owned();
            for y in owned.iter_mut() {
                *y = finite_or_nan(f(x, *y));
            }
            Value::Grid(Cow::Owned(owned))
        }
        (Value::Grid(ga), Value::Grid(gb)) => {
            let mut owned = ga.into_owned();
            for (x, y) in owned.iter_mut().zip(gb.iter()) {
                *x = finite_or_nan(f(*x, *y));
            }
            Value::Grid(Cow::Owned(owned))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::parse_str;
    use chrono::NaiveDate;

    fn panel(closes: &[f64]) -> PricePanel {
        let dates = (0..closes.len())
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect();
        PricePanel::from_parts(dates, vec!["X".into()], std::array::from_fn(|_| closes.to_vec())).unwrap()
    }

    fn run(src: &str, p: &PricePanel) -> Vec<f64> {
        evaluate(&parse_str(src).unwrap(), p).unwrap().values
    }

    #[test]
    fn literal_broadcasts() {
        assert_eq!(run("3", &panel(&[1.0; 5])), vec![3.0; 5]);
    }

    #[test]
    fn delay_difference() {
        let out = run("close - delay(close, 1)", &panel(&[10.0, 12.0, 11.0]));
        assert!(out[0].is_nan());
        assert_eq!(&out[1..], &[2.0, -1.0]);
    }

    #[test]
    fn division_by_zero_is_undefined() {
        let out = run("1 / (close - 10)", &panel(&[10.0, 12.0]));
        assert!(out[0].is_nan());
        assert_eq!(out[1], 0.5);
    }

    #[test]
    fn conditional_and_returns() {
        let out = run("returns > 0 ? 1 : -1", &panel(&[10.0, 11.0, 10.5]));
        assert!(out[0].is_nan());
        assert_eq!(&out[1..], &[1.0, -1.0]);
    }

    #[test]
    fn long_window_is_all_undefined() {
        assert!(run("ts_mean(close, 10)", &panel(&[1.0; 5])).iter().all(|v| v.is_nan()));
    }

    #[test]
    fn adj_close_switch() {
        let mut p = panel(&[1.0, 2.0]);
        let dates = p.dates().to_vec();
        let mut vals: [Vec<f64>; 6] = std::array::from_fn(|_| vec![1.0, 2.0]);
        vals[Field::AdjClose.index()] = vec![5.0, 6.0];
        p = PricePanel::from_parts(dates, vec!["X".into()], vals).unwrap();
        let e = parse_str("close").unwrap();
        let opts = EvalOptions {
            close_source: CloseSource::AdjClose,
        };
        assert_eq!(evaluate_with(&e, &p, opts).unwrap().values, vec![5.0, 6.0]);
    }

    #[test]
    fn shape_errors_surface() {
        assert!(matches!(evaluate(&parse_str("rank(close)").unwrap(), &panel(&[1.0, 2.0])), Err(Error::Shape(_))));
    }
}
