//! The built-in function table.

use crate::kernels::Stat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Per-cell arithmetic; broadcasts scalars.
    Elementwise,
    /// Trailing-window operator along the date axis.
    TimeSeries,
    /// Operator across instruments on each date.
    CrossSectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Delay,
    Delta,
    Stat(Stat),
    TsRank,
    Correlation,
    Covariance,
    DecayLinear,
    Rank,
    Scale,
    SignedPower,
    Log,
    Abs,
    Sign,
    Min,
    Max,
}

/// Argument roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Expr,
    /// Positive integer literal; non-integers are floored.
    Window { min: usize },
    /// Numeric literal.
    Constant,
}

#[derive(Debug, Clone, Copy)]
pub struct Signature {
    pub name: &'static str,
    pub op: Op,
    pub family: Family,
    pub params: &'static [Param],
    /// Trailing parameters that may be omitted.
    pub optional: usize,
}

impl Signature {
    pub fn min_arity(&self) -> usize {
        self.params.len() - self.optional
    }

    pub fn max_arity(&self) -> usize {
        self.params.len()
    }
}

const X: Param = Param::Expr;
const W1: Param = Param::Window { min: 1 };
const W2: Param = Param::Window { min: 2 };

macro_rules! sig {
    ($name:literal, $op:expr, $fam:ident, [$($p:expr),*]) => {
        sig!($name, $op, $fam, [$($p),*], 0)
    };
    ($name:literal, $op:expr, $fam:ident, [$($p:expr),*], $opt:literal) => {
        Signature { name: $name, op: $op, family: Family::$fam, params: &[$($p),*], optional: $opt }
    };
}

pub const FUNCTIONS: &[Signature] = &[
    sig!("delay", Op::Delay, TimeSeries, [X, W1]),
    sig!("delta", Op::Delta, TimeSeries, [X, W1]),
    sig!("ts_sum", Op::Stat(Stat::Sum), TimeSeries, [X, W1]),
    sig!("sum", Op::Stat(Stat::Sum), TimeSeries, [X, W1]),
    sig!("ts_mean", Op::Stat(Stat::Mean), TimeSeries, [X, W1]),
    sig!("ts_stddev", Op::Stat(Stat::StdDev), TimeSeries, [X, W2]),
    sig!("stddev", Op::Stat(Stat::StdDev), TimeSeries, [X, W2]),
    sig!("ts_min", Op::Stat(Stat::Min), TimeSeries, [X, W1]),
    sig!("ts_max", Op::Stat(Stat::Max), TimeSeries, [X, W1]),
    sig!("ts_argmax", Op::Stat(Stat::ArgMax), TimeSeries, [X, W1]),
    sig!("ts_argmin", Op::Stat(Stat::ArgMin), TimeSeries, [X, W1]),
    sig!("ts_product", Op::Stat(Stat::Product), TimeSeries, [X, W1]),
    sig!("product", Op::Stat(Stat::Product), TimeSeries, [X, W1]),
    sig!("ts_rank", Op::TsRank, TimeSeries, [X, W2]),
    sig!("correlation", Op::Correlation, TimeSeries, [X, X, W2]),
    sig!("covariance", Op::Covariance, TimeSeries, [X, X, W2]),
    sig!("decay_linear", Op::DecayLinear, TimeSeries, [X, W1]),
    sig!("rank", Op::Rank, CrossSectional, [X]),
    sig!("scale", Op::Scale, CrossSectional, [X, Param::Constant], 1),
    sig!("signedpower", Op::SignedPower, Elementwise, [X, X]),
    sig!("log", Op::Log, Elementwise, [X]),
    sig!("abs", Op::Abs, Elementwise, [X]),
    sig!("sign", Op::Sign, Elementwise, [X]),
    sig!("min", Op::Min, Elementwise, [X, X]),
    sig!("max", Op::Max, Elementwise, [X, X]),
];

pub fn lookup(name: &str) -> Option<&'static Signature> {
    FUNCTIONS.iter().find(|s| s.name == name)
}

/// Names of every cross-sectional function.
pub fn cross_sectional_names() -> Vec<&'static str> {
    FUNCTIONS
        .iter()
        .filter(|s| s.family == Family::CrossSectional)
        .map(|s| s.name)
        .collect()
}

/// Window or constant argument value, when `arg` is a literal.
pub fn window_value(value: f64) -> Option<usize> {
    (value.is_finite() && value >= 1.0).then(|| value.floor() as usize)
}
