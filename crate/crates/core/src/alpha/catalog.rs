//! Named alpha catalogs: one `name := expression` per line, `#` comments.

use std::path::Path;

use rayon::prelude::*;

use super::ast::AlphaExpr;
use super::eval::{evaluate_with, EvalOptions, Grid};
use super::parser::parse_str;
use crate::error::{Error, Result};
use crate::market_data::PricePanel;

const BUILTIN: &str = include_str!("../../catalog/alphas.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct NamedAlpha {
    pub name: String,
    pub expr: AlphaExpr,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    pub alphas: Vec<NamedAlpha>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled catalog parses")
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut alphas: Vec<NamedAlpha> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Catalog {
                line: line_no,
                message,
            };
            let (name, body) = line
                .split_once(":=")
                .ok_or_else(|| err("expected `name := expression`".into()))?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("invalid alpha name {name:?}")));
            }
            if alphas.iter().any(|a| a.name == name) {
                return Err(err(format!("duplicate alpha `{name}`")));
            }
            let expr = parse_str(body.trim()).map_err(|e| err(e.to_string()))?;
            alphas.push(NamedAlpha {
                name: name.to_string(),
                expr,
            });
        }
        Ok(Self { alphas })
    }

    /// Adds entries from `other`; an entry with an existing name replaces it
    /// in place.
    pub fn merge(&mut self, other: Catalog) {
        for alpha in other.alphas {
            match self.alphas.iter_mut().find(|a| a.name == alpha.name) {
                Some(slot) => *slot = alpha,
                None => self.alphas.push(alpha),
            }
        }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&NamedAlpha> {
        self.alphas.iter().find(|a| a.name == name)
    }

    /// Evaluates every entry over the whole panel, one rayon task per
    /// entry; results come back in catalog order.
    pub fn evaluate(&self, panel: &PricePanel, options: EvalOptions) -> Result<Vec<Grid>> {
        self.alphas
            .par_iter()
            .map(|a| {
                evaluate_with(&a.expr, panel, options).map_err(|e| Error::Alpha {
                    name: a.name.clone(),
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Renders the catalog back to its text form.
    pub fn to_text(&self) -> String {
        self.alphas
            .iter()
            .map(|a| format!("{} := {}\n", a.name, a.expr))
            .collect()
    }
}
