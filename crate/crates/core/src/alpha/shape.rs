use std::fmt;

use super::ast::AlphaExpr;
use super::functions::{self, Family, Param};
use crate::error::{Error, Result};
use crate::market_data::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Scalar,
    /// Per-date values for one instrument.
    Series,
    /// Per-date, per-instrument values.
    Panel,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Scalar => "scalar",
            Shape::Series => "series",
            Shape::Panel => "panel",
        })
    }
}

/// A resolved field reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRef {
    Raw(Field),
    /// Close-to-close simple return.
    Returns,
    /// Typical price `(high + low + close) / 3`, standing in for VWAP on daily bars.
    Vwap,
    /// `n`-day mean volume.
    Adv(usize),
}

impl FieldRef {
    pub fn resolve(name: &str) -> Option<Self> {
        Some(match name {
            "open" => FieldRef::Raw(Field::Open),
            "high" => FieldRef::Raw(Field::High),
            "low" => FieldRef::Raw(Field::Low),
            "close" => FieldRef::Raw(Field::Close),
            "adj_close" => FieldRef::Raw(Field::AdjClose),
            "volume" => FieldRef::Raw(Field::Volume),
            "returns" => FieldRef::Returns,
            "vwap" => FieldRef::Vwap,
            _ => {
                let n: usize = name.strip_prefix("adv")?.parse().ok()?;
                if n == 0 {
                    return None;
                }
                FieldRef::Adv(n)
            }
        })
    }

    /// Raw fields this reference reads.
    pub fn inputs(self) -> Vec<Field> {
        match self {
            FieldRef::Raw(f) => vec![f],
            FieldRef::Returns => vec![Field::Close],
            FieldRef::Vwap => vec![Field::High, Field::Low, Field::Close],
            FieldRef::Adv(_) => vec![Field::Volume],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapeContext {
    pub available: Vec<Field>,
    pub instruments: usize,
}

impl ShapeContext {
    pub fn new(instruments: usize) -> Self {
        Self {
            available: Field::ALL.to_vec(),
            instruments,
        }
    }

    fn data_shape(&self) -> Shape {
        if self.instruments > 1 {
            Shape::Panel
        } else {
            Shape::Series
        }
    }
}

pub fn shape_check(expr: &AlphaExpr, ctx: &ShapeContext) -> Result<Shape> {
    match expr {
        AlphaExpr::Literal(_) => Ok(Shape::Scalar),
        AlphaExpr::Field(name) => {
            let field = FieldRef::resolve(name).ok_or_else(|| Error::Shape(format!("unknown identifier `{name}`")))?;
            if let Some(missing) = field.inputs().into_iter().find(|f| !ctx.available.contains(f)) {
                return Err(Error::Shape(format!("`{name}` needs field `{}`, which is unavailable", missing.name())));
            }
            Ok(ctx.data_shape())
        }
        AlphaExpr::Neg(inner) => shape_check(inner, ctx),
        AlphaExpr::Binary { lhs, rhs, .. } => Ok(shape_check(lhs, ctx)?.max(shape_check(rhs, ctx)?)),
        AlphaExpr::Conditional {
            cond,
            then,
            otherwise,
        } => Ok(shape_check(cond, ctx)?
            .max(shape_check(then, ctx)?)
            .max(shape_check(otherwise, ctx)?)),
        AlphaExpr::Call { name, args } => {
            let sig = functions::lookup(name).ok_or_else(|| Error::Shape(format!("unknown function `{name}`")))?;
            if args.len() < sig.min_arity() || args.len() > sig.max_arity() {
                return Err(Error::Shape(format!("{name}: wrong number of arguments")));
            }
            let mut shape = Shape::Scalar;
            for (arg, param) in args.iter().zip(sig.params) {
                if *param != Param::Expr {
                    continue;
                }
                let s = shape_check(arg, ctx)?;
                match sig.family {
                    Family::TimeSeries if s == Shape::Scalar => {
                        return Err(Error::Shape(format!("{name} needs a series or panel, got a scalar")));
                    }
                    Family::CrossSectional if s != Shape::Panel => {
                        return Err(Error::Shape(format!(
                            "{name} is cross-sectional and needs a multi-instrument panel, got a {s}"
                        )));
                    }
                    _ => {}
                }
                shape = shape.max(s);
            }
            Ok(shape)
        }
    }
}
