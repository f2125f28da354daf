use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Comma,
    LParen,
    RParen,
    Caret,
    Question,
    Colon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset into the source.
    pub position: usize,
}

const TWO_CHAR_OPS: [&str; 4] = ["<=", ">=", "==", "!="];

/// Longest-match tokenizer. Whitespace separates tokens and is skipped.
pub fn tokenize(source: &str) -> Result<Vec<Token<'_>>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = scan_number(bytes, i);
            TokenKind::Number
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            TokenKind::Identifier
        } else if TWO_CHAR_OPS.iter().any(|op| source[i..].starts_with(op)) {
            i += 2;
            TokenKind::Operator
        } else {
            i += 1;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'<' | b'>' => TokenKind::Operator,
                b',' => TokenKind::Comma,
                b'(' => TokenKind::LParen,
                b')' => TokenKind::RParen,
                b'^' => TokenKind::Caret,
                b'?' => TokenKind::Question,
                b':' => TokenKind::Colon,
                _ => {
                    let found = source[start..].chars().next().unwrap_or('\0');
                    return Err(Error::Lex {
                        offset: start,
                        found,
                    });
                }
            }
        };
        tokens.push(Token {
            kind,
            text: &source[start..i],
            position: start,
        });
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}
