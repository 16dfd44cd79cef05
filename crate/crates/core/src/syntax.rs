//! Tokenizer and recursive-descent helpers shared by the formula parser and
//! the `.ctp` program parser.

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::formula::{Atom, Formula, Int, LinTerm, Rel, Var};

/// A syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(Int),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Semi,
    Assign,
    Arrow,
    Implies,
    And,
    Or,
    Bang,
    Rel(Rel),
    Eol,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Assign => ":=",
            Tok::Arrow => "->",
            Tok::Implies => "=>",
            Tok::And => "&&",
            Tok::Or => "||",
            Tok::Bang => "!",
            Tok::Rel(r) => r.symbol(),
            Tok::Eol => return f.write_str("end of line"),
        };
        write!(f, "`{s}`")
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '#' | '@')
}

/// Splits `src` into tokens. Newlines become [`Tok::Eol`] when `keep_eol`
/// is set and are skipped otherwise.
pub(crate) fn lex(src: &str, keep_eol: bool) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let next = chars.get(i + 1).copied();
        let mut width = 1;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                if keep_eol {
                    out.push((Tok::Eol, tl, tc));
                }
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                col += i - start;
                out.push((Tok::Int(digits.parse().expect("digit run")), tl, tc));
                continue;
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                col += i - start;
                out.push((Tok::Ident(name), tl, tc));
                continue;
            }
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ';' => Tok::Semi,
            '-' if next == Some('>') => {
                width = 2;
                Tok::Arrow
            }
            '-' => Tok::Minus,
            ':' if next == Some('=') => {
                width = 2;
                Tok::Assign
            }
            ':' => Tok::Colon,
            '=' if next == Some('>') => {
                width = 2;
                Tok::Implies
            }
            '=' if next == Some('=') => {
                width = 2;
                Tok::Rel(Rel::Eq)
            }
            '=' => Tok::Rel(Rel::Eq),
            '!' if next == Some('=') => {
                width = 2;
                Tok::Rel(Rel::Ne)
            }
            '!' => Tok::Bang,
            '<' if next == Some('=') => {
                width = 2;
                Tok::Rel(Rel::Le)
            }
            '<' => Tok::Rel(Rel::Lt),
            '>' if next == Some('=') => {
                width = 2;
                Tok::Rel(Rel::Ge)
            }
            '>' => Tok::Rel(Rel::Gt),
            '&' if next == Some('&') => {
                width = 2;
                Tok::And
            }
            '|' if next == Some('|') => {
                width = 2;
                Tok::Or
            }
            other => {
                return Err(ParseError {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, tl, tc));
        i += width;
        col += width;
    }
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    pub fn new(src: &str, keep_eol: bool) -> Result<Self, ParseError> {
        let toks = lex(src, keep_eol)?;
        let lines = src.split('\n').count();
        let last_len = src.rsplit('\n').next().map_or(0, |l| l.chars().count());
        Ok(Parser {
            toks,
            pos: 0,
            end: (lines.max(1), last_len + 1),
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn position(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.1, t.2))
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.position();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn int(&mut self) -> Result<Int, ParseError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(if negative { -n } else { n })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn monomial(&mut self) -> Result<LinTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let starred = self.peek() == Some(&Tok::Star)
                    && matches!(self.peek_at(1), Some(Tok::Ident(s)) if !is_keyword(s));
                if starred {
                    self.pos += 1;
                }
                match self.peek() {
                    Some(Tok::Ident(s)) if !is_keyword(s) => {
                        let v = Var::new(s.as_str());
                        self.pos += 1;
                        Ok(LinTerm::scaled_var(n, v))
                    }
                    _ => Ok(LinTerm::constant(n)),
                }
            }
            Some(Tok::Ident(s)) if !is_keyword(&s) => {
                self.pos += 1;
                Ok(LinTerm::var(s.as_str()))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    /// `[-] mono ((+|-) mono)*` where `mono` is `n`, `x`, `n*x` or `nx`.
    pub fn linterm(&mut self) -> Result<LinTerm, ParseError> {
        let negative = self.eat(&Tok::Minus);
        let first = self.monomial()?;
        let mut acc = if negative { first.negated() } else { first };
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.plus(&self.monomial()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.minus(&self.monomial()?);
            } else {
                return Ok(acc);
            }
        }
    }

    pub fn atom(&mut self) -> Result<Atom, ParseError> {
        let lhs = self.linterm()?;
        let rel = match self.peek() {
            Some(Tok::Rel(r)) => *r,
            _ => return Err(self.unexpected("comparison")),
        };
        self.pos += 1;
        let rhs = self.linterm()?;
        Ok(Atom::new(lhs, rel, rhs))
    }

    /// Formula with precedence `!` > `&&` > `||` > `=>` (right associative).
    /// N-ary chains build flat `And`/`Or` nodes without any simplification,
    /// so rendering and re-parsing reproduces the tree exactly.
    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::And) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        if self.eat_keyword("true") {
            return Ok(Formula::True);
        }
        if self.eat_keyword("false") {
            return Ok(Formula::False);
        }
        Ok(Formula::Atom(self.atom()?))
    }
}

/// Words that cannot be used as variable names.
pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "true"
            | "false"
            | "skip"
            | "shared"
            | "local"
            | "assume"
            | "resource"
            | "flag"
            | "property"
            | "always"
            | "process"
    )
}

/// Renders a linear term as `2*x - y + 3`; the zero term is `0`.
pub(crate) fn write_linterm(t: &LinTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut first = true;
    for (v, c) in t.coeffs() {
        let negative = c < &Int::zero();
        let mag = if negative { -c } else { c.clone() };
        match (first, negative) {
            (true, true) => f.write_str("-")?,
            (true, false) => {}
            (false, true) => f.write_str(" - ")?,
            (false, false) => f.write_str(" + ")?,
        }
        if mag == Int::from(1) {
            write!(f, "{v}")?;
        } else {
            write!(f, "{mag}*{v}")?;
        }
        first = false;
    }
    let c = t.constant_part();
    if first {
        write!(f, "{c}")
    } else if c.is_zero() {
        Ok(())
    } else if c < &Int::zero() {
        write!(f, " - {}", -c)
    } else {
        write!(f, " + {c}")
    }
}
