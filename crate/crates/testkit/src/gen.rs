//! Random alpha expressions and catalogs.

use trendalpha::alpha::{AlphaExpr, BinOp};

use crate::FixtureRng;

const FIELDS: &[&str] = &["open", "high", "low", "close", "volume", "returns", "vwap", "adv5", "adv20"];
const OPS: &[BinOp] = &[
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::Pow,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
    BinOp::Eq,
    BinOp::Ne,
];
/// (name, expression arguments, minimum window or 0 for none)
const CALLS: &[(&str, usize, usize)] = &[
    ("delay", 1, 1),
    ("delta", 1, 1),
    ("ts_sum", 1, 1),
    ("sum", 1, 1),
    ("ts_mean", 1, 1),
    ("ts_stddev", 1, 2),
    ("stddev", 1, 2),
    ("ts_min", 1, 1),
    ("ts_max", 1, 1),
    ("ts_argmax", 1, 1),
    ("ts_argmin", 1, 1),
    ("ts_product", 1, 1),
    ("product", 1, 1),
    ("ts_rank", 1, 2),
    ("correlation", 2, 2),
    ("covariance", 2, 2),
    ("decay_linear", 1, 1),
    ("signedpower", 2, 0),
    ("log", 1, 0),
    ("abs", 1, 0),
    ("sign", 1, 0),
    ("min", 2, 0),
    ("max", 2, 0),
];

pub struct ExprGen {
    rng: FixtureRng,
    /// Allow `rank` and `scale`.
    pub cross_sectional: bool,
    pub max_window: usize,
}

impl ExprGen {
    pub fn new(seed: u64, cross_sectional: bool) -> Self {
        Self {
            rng: FixtureRng::new(seed),
            cross_sectional,
            max_window: 8,
        }
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.below(xs.len())]
    }

    fn literal(&mut self) -> AlphaExpr {
        AlphaExpr::Literal(match self.rng.below(4) {
            0 => self.rng.below(10) as f64,
            1 => (self.rng.range(0.0, 5.0) * 100.0).round() / 100.0,
            2 => self.rng.range(0.0, 1.0),
            _ => 0.5,
        })
    }

    fn window(&mut self, min: usize) -> AlphaExpr {
        let w = min + self.rng.below(self.max_window - min + 1);
        AlphaExpr::Literal(w as f64)
    }

    /// Any syntactically valid expression, shape-correct or not.
    pub fn any(&mut self, depth: usize) -> AlphaExpr {
        if depth == 0 || self.rng.below(5) == 0 {
            return if self.rng.below(2) == 0 {
                self.literal()
            } else {
                AlphaExpr::Field((*self.pick(FIELDS)).to_string())
            };
        }
        match self.rng.below(5) {
            0 => AlphaExpr::Neg(Box::new(self.any(depth - 1))),
            1 | 2 => AlphaExpr::Binary {
                op: *self.pick(OPS),
                lhs: Box::new(self.any(depth - 1)),
                rhs: Box::new(self.any(depth - 1)),
            },
            3 => AlphaExpr::Conditional {
                cond: Box::new(self.any(depth - 1)),
                then: Box::new(self.any(depth - 1)),
                otherwise: Box::new(self.any(depth - 1)),
            },
            _ => self.call(depth, false),
        }
    }

    /// A shape-correct expression whose value varies with the data.
    pub fn data(&mut self, depth: usize) -> AlphaExpr {
        if depth == 0 || self.rng.below(6) == 0 {
            return AlphaExpr::Field((*self.pick(FIELDS)).to_string());
        }
        match self.rng.below(6) {
            0 => AlphaExpr::Neg(Box::new(self.data(depth - 1))),
            1 | 2 => {
                let op = *self.pick(OPS);
                let data = self.data(depth - 1);
                let other = if self.rng.below(2) == 0 { self.literal() } else { self.data(depth - 1) };
                let (lhs, rhs) = if op == BinOp::Pow || self.rng.below(2) == 0 { (data, other) } else { (other, data) };
                AlphaExpr::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
            3 => AlphaExpr::Conditional {
                cond: Box::new(self.data(depth - 1)),
                then: Box::new(self.data(depth - 1)),
                otherwise: Box::new(if self.rng.below(2) == 0 { self.literal() } else { self.data(depth - 1) }),
            },
            _ => self.call(depth, true),
        }
    }

    fn call(&mut self, depth: usize, data: bool) -> AlphaExpr {
        let sub = |g: &mut Self| if data { g.data(depth - 1) } else { g.any(depth - 1) };
        if self.cross_sectional && self.rng.below(6) == 0 {
            let arg = sub(self);
            return if self.rng.below(2) == 0 {
                AlphaExpr::Call {
                    name: "rank".into(),
                    args: vec![arg],
                }
            } else {
                let mut args = vec![arg];
                if self.rng.below(2) == 0 {
                    args.push(AlphaExpr::Literal(1.0 + self.rng.below(3) as f64));
                }
                AlphaExpr::Call {
                    name: "scale".into(),
                    args,
                }
            };
        }
        let (name, n_expr, min_window) = *self.pick(CALLS);
        let mut args: Vec<AlphaExpr> = (0..n_expr).map(|_| sub(self)).collect();
        if name == "signedpower" && data {
            args[1] = self.literal();
        }
        if min_window > 0 {
            args.push(self.window(min_window));
        }
        AlphaExpr::Call {
            name: name.into(),
            args,
        }
    }
}

/// Catalog text with `n` shape-correct entries named `g000`, `g001`, ...
pub fn random_catalog(seed: u64, n: usize, cross_sectional: bool) -> String {
    let mut gen = ExprGen::new(seed, cross_sectional);
    (0..n).map(|i| format!("g{i:03} := {}\n", gen.data(3))).collect()
}
