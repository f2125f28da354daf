//! Recursive-descent parser.
//!
//! Precedence, tightest first: unary minus, `^` (right-associative),
//! `* /`, `+ -`, comparisons, and the ternary `?:` (right-associative).
//! Binary operators other than `^` associate to the left.

use super::ast::{AlphaExpr, BinOp};
use super::functions::{self, Param};
use super::token::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};

pub fn parse_str(source: &str) -> Result<AlphaExpr> {
    let tokens = tokenize(source)?;
    parse(&tokens, source.len())
}

/// Parses a full token list. `source_len` is used to position errors at end
/// of input.
pub fn parse(tokens: &[Token<'_>], source_len: usize) -> Result<AlphaExpr> {
    let mut p = Parser {
        tokens,
        pos: 0,
        end: source_len,
    };
    let expr = p.ternary()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(t.position, format!("unexpected `{}`", t.text)));
    }
    Ok(expr)
}

struct Parser<'t, 'a> {
    tokens: &'t [Token<'a>],
    pos: usize,
    end: usize,
}

impl<'t, 'a> Parser<'t, 'a> {
    fn peek(&self) -> Option<&'t Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn eat(&mut self, kind: TokenKind) -> Option<&'t Token<'a>> {
        let t = self.peek().filter(|t| t.kind == kind)?;
        self.pos += 1;
        Some(t)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&'t Token<'a>> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.error_at(t.position, format!("expected {what}, found `{}`", t.text))),
            None => Err(self.error_at(self.end, format!("expected {what}, found end of input"))),
        }
    }

    fn ternary(&mut self) -> Result<AlphaExpr> {
        let cond = self.comparison()?;
        if self.eat(TokenKind::Question).is_none() {
            return Ok(cond);
        }
        let then = self.ternary()?;
        self.expect(TokenKind::Colon, "`:`")?;
        let otherwise = self.ternary()?;
        Ok(AlphaExpr::Conditional {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn binary_level(
        &mut self,
        ops: &[BinOp],
        next: fn(&mut Self) -> Result<AlphaExpr>,
    ) -> Result<AlphaExpr> {
        let mut lhs = next(self)?;
        while let Some(op) = self
            .peek()
            .filter(|t| t.kind == TokenKind::Operator)
            .and_then(|t| BinOp::from_symbol(t.text))
            .filter(|op| ops.contains(op))
        {
            self.pos += 1;
            let rhs = next(self)?;
            lhs = AlphaExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<AlphaExpr> {
        use BinOp::*;
        self.binary_level(&[Lt, Le, Gt, Ge, Eq, Ne], Self::additive)
    }

    fn additive(&mut self) -> Result<AlphaExpr> {
        self.binary_level(&[BinOp::Add, BinOp::Sub], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<AlphaExpr> {
        self.binary_level(&[BinOp::Mul, BinOp::Div], Self::power)
    }

    fn power(&mut self) -> Result<AlphaExpr> {
        let base = self.unary()?;
        if self.eat(TokenKind::Caret).is_some() {
            let exponent = self.power()?;
            return Ok(AlphaExpr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<AlphaExpr> {
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Operator && t.text == "-")
        {
            self.pos += 1;
            return Ok(AlphaExpr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<AlphaExpr> {
        let Some(tok) = self.peek() else {
            return Err(self.error_at(self.end, "unexpected end of input"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let v: f64 = tok
                    .text
                    .parse()
                    .map_err(|_| self.error_at(tok.position, format!("bad number `{}`", tok.text)))?;
                Ok(AlphaExpr::Literal(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.ternary()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.eat(TokenKind::LParen).is_some() {
                    self.call(tok)
                } else {
                    Ok(AlphaExpr::Field(tok.text.to_string()))
                }
            }
            _ => Err(self.error_at(tok.position, format!("unexpected `{}`", tok.text))),
        }
    }

    fn call(&mut self, name: &Token<'a>) -> Result<AlphaExpr> {
        let mut args = Vec::new();
        let mut arg_offsets = Vec::new();
        if self.eat(TokenKind::RParen).is_none() {
            loop {
                arg_offsets.push(self.here());
                args.push(self.ternary()?);
                if self.eat(TokenKind::Comma).is_some() {
                    continue;
                }
                self.expect(TokenKind::RParen, "`,` or `)`")?;
                break;
            }
        }
        if let Some(sig) = functions::lookup(name.text) {
            if args.len() < sig.min_arity() || args.len() > sig.max_arity() {
                let expected = if sig.optional == 0 {
                    sig.max_arity().to_string()
                } else {
                    format!("{}..={}", sig.min_arity(), sig.max_arity())
                };
                return Err(self.error_at(
                    name.position,
                    format!("{} takes {expected} argument(s), got {}", sig.name, args.len()),
                ));
            }
            for ((arg, param), offset) in args.iter().zip(sig.params).zip(&arg_offsets) {
                check_literal_param(arg, *param).map_err(|m| self.error_at(*offset, format!("{}: {m}", sig.name)))?;
            }
        }
        Ok(AlphaExpr::Call {
            name: name.text.to_string(),
            args,
        })
    }
}

fn check_literal_param(arg: &AlphaExpr, param: Param) -> std::result::Result<(), String> {
    match param {
        Param::Expr => Ok(()),
        Param::Window { min } => match arg {
            AlphaExpr::Literal(v) => match functions::window_value(*v) {
                Some(w) if w >= min => Ok(()),
                _ => Err(format!("window must be an integer >= {min}, got {v}")),
            },
            _ => Err("window must be a numeric literal".into()),
        },
        Param::Constant => match arg {
            AlphaExpr::Literal(_) => Ok(()),
            _ => Err("expected a numeric literal".into()),
        },
    }
}
