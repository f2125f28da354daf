//! The formulaic-alpha expression language.
//!
//! ```text
//! alpha053 := -1 * delta(((close - low) - (high - close)) / (close - low), 9)
//! ```
//!
//! Source text is tokenized, parsed into an [`AlphaExpr`], shape-checked
//! against the number of instruments, and evaluated with the kernels in
//! [`crate::kernels`]. Field identifiers are `open`, `high`, `low`, `close`,
//! `adj_close`, `volume`, `returns` (close-to-close), `vwap` (typical price,
//! since daily bars carry no true VWAP) and `adv{n}` (n-day mean volume).

mod ast;
mod catalog;
mod eval;
pub mod functions;
mod parser;
mod shape;
mod token;

pub use ast::{pretty_print, AlphaExpr, BinOp};
pub use catalog::{Catalog, NamedAlpha};
pub use eval::{evaluate, evaluate_with, CloseSource, EvalOptions, Grid};
pub use parser::{parse, parse_str};
pub use shape::{shape_check, FieldRef, Shape, ShapeContext};
pub use token::{tokenize, Token, TokenKind};
