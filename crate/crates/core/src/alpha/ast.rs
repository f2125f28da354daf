use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "^" => BinOp::Pow,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            _ => return None,
        })
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => PREC_CMP,
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div => PREC_MUL,
            BinOp::Pow => PREC_POW,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        let truth = |c: bool| if c { 1.0 } else { 0.0 };
        if a.is_nan() || b.is_nan() {
            return f64::NAN;
        }
        let v = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => a.powf(b),
            BinOp::Lt => truth(a < b),
            BinOp::Le => truth(a <= b),
            BinOp::Gt => truth(a > b),
            BinOp::Ge => truth(a >= b),
            BinOp::Eq => truth(a == b),
            BinOp::Ne => truth(a != b),
        };
        if v.is_finite() {
            v
        } else {
            f64::NAN
        }
    }
}

pub(crate) const PREC_TERNARY: u8 = 1;
pub(crate) const PREC_CMP: u8 = 2;
pub(crate) const PREC_ADD: u8 = 3;
pub(crate) const PREC_MUL: u8 = 4;
pub(crate) const PREC_POW: u8 = 5;
pub(crate) const PREC_UNARY: u8 = 6;
pub(crate) const PREC_ATOM: u8 = 7;

/// A formulaic-alpha expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaExpr {
    Literal(f64),
    /// Field reference, resolved at shape-check time.
    Field(String),
    Neg(Box<AlphaExpr>),
    Binary {
        op: BinOp,
        lhs: Box<AlphaExpr>,
        rhs: Box<AlphaExpr>,
    },
    Conditional {
        cond: Box<AlphaExpr>,
        then: Box<AlphaExpr>,
        otherwise: Box<AlphaExpr>,
    },
    Call {
        name: String,
        args: Vec<AlphaExpr>,
    },
}

impl AlphaExpr {
    pub fn binary(op: BinOp, lhs: AlphaExpr, rhs: AlphaExpr) -> Self {
        AlphaExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(name: &str, args: Vec<AlphaExpr>) -> Self {
        AlphaExpr::Call {
            name: name.to_string(),
            args,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            AlphaExpr::Literal(_) | AlphaExpr::Field(_) | AlphaExpr::Call { .. } => PREC_ATOM,
            AlphaExpr::Neg(_) => PREC_UNARY,
            AlphaExpr::Binary { op, .. } => op.precedence(),
            AlphaExpr::Conditional { .. } => PREC_TERNARY,
        }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&AlphaExpr> {
        match self {
            AlphaExpr::Literal(_) | AlphaExpr::Field(_) => vec![],
            AlphaExpr::Neg(e) => vec![e],
            AlphaExpr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            AlphaExpr::Conditional {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
            AlphaExpr::Call { args, .. } => args.iter().collect(),
        }
    }

    /// True if any call in the tree is one of `names`.
    pub fn calls_any(&self, names: &[&str]) -> bool {
        if let AlphaExpr::Call { name, .. } = self {
            if names.contains(&name.as_str()) {
                return true;
            }
        }
        self.children().into_iter().any(|c| c.calls_any(names))
    }
}

/// Renders with the minimum parentheses needed to parse back to the same tree.
pub fn pretty_print(expr: &AlphaExpr) -> String {
    expr.to_string()
}

impl fmt::Display for AlphaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaExpr::Literal(v) => write!(f, "{v}"),
            AlphaExpr::Field(name) => f.write_str(name),
            AlphaExpr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, PREC_UNARY)
            }
            AlphaExpr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (left_min, right_min) = if *op == BinOp::Pow {
                    // right-associative; the base binds tighter than ^
                    (PREC_UNARY, PREC_POW)
                } else {
                    (p, p + 1)
                };
                write_child(f, lhs, left_min)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, rhs, right_min)
            }
            AlphaExpr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                write_child(f, cond, PREC_CMP)?;
                f.write_str(" ? ")?;
                write_child(f, then, PREC_TERNARY)?;
                f.write_str(" : ")?;
                write_child(f, otherwise, PREC_TERNARY)
            }
            AlphaExpr::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &AlphaExpr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: f64) -> AlphaExpr {
        AlphaExpr::Literal(v)
    }

    #[test]
    fn minimal_parentheses() {
        let e = AlphaExpr::binary(BinOp::Add, lit(1.0), AlphaExpr::binary(BinOp::Mul, lit(2.0), lit(3.0)));
        assert_eq!(pretty_print(&e), "1 + 2 * 3");
        let e = AlphaExpr::binary(BinOp::Mul, AlphaExpr::binary(BinOp::Add, lit(1.0), lit(2.0)), lit(3.0));
        assert_eq!(pretty_print(&e), "(1 + 2) * 3");
    }

    #[test]
    fn power_and_negation() {
        let pow = |a, b| AlphaExpr::binary(BinOp::Pow, a, b);
        let x = || AlphaExpr::Field("close".into());
        assert_eq!(pretty_print(&pow(x(), pow(lit(2.0), lit(3.0)))), "close ^ 2 ^ 3");
        assert_eq!(pretty_print(&pow(pow(x(), lit(2.0)), lit(3.0))), "(close ^ 2) ^ 3");
        assert_eq!(pretty_print(&AlphaExpr::Neg(Box::new(pow(x(), lit(2.0))))), "-(close ^ 2)");
        assert_eq!(pretty_print(&pow(AlphaExpr::Neg(Box::new(x())), lit(2.0))), "-close ^ 2");
    }

    #[test]
    fn left_associative_subtraction() {
        let sub = |a, b| AlphaExpr::binary(BinOp::Sub, a, b);
        assert_eq!(pretty_print(&sub(sub(lit(1.0), lit(2.0)), lit(3.0))), "1 - 2 - 3");
        assert_eq!(pretty_print(&sub(lit(1.0), sub(lit(2.0), lit(3.0)))), "1 - (2 - 3)");
    }

    #[test]
    fn comparisons_yield_indicators() {
        assert_eq!(BinOp::Lt.apply(1.0, 2.0), 1.0);
        assert_eq!(BinOp::Ge.apply(1.0, 2.0), 0.0);
        assert!(BinOp::Div.apply(1.0, 0.0).is_nan());
        assert!(BinOp::Lt.apply(f64::NAN, 2.0).is_nan());
    }
}
