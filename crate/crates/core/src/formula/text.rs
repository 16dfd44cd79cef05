//! Canonical text form of terms, atoms and formulas.
//!
//! Rendering is fully parenthesized so that [`Formula::parse`] reproduces the
//! exact tree: `(x + 1 <= 8)`, `!(x = 0)`, `(a && b)`, `(a || b)`,
//! `(a => b)`, `true`, `false`.

use std::fmt;

use super::{Atom, Formula, LinTerm};
use crate::syntax::{write_linterm, Parser};

pub use crate::syntax::ParseError;

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_linterm(self, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.lhs, self.rel.symbol(), self.rhs)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(fs) => write_list(f, fs, " && "),
            Formula::Or(fs) => write_list(f, fs, " || "),
            Formula::Implies(a, b) => write!(f, "({a} => {b})"),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, fs: &[Formula], sep: &str) -> fmt::Result {
    f.write_str("(")?;
    for (i, g) in fs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{g}")?;
    }
    f.write_str(")")
}

impl LinTerm {
    pub fn parse(src: &str) -> Result<LinTerm, ParseError> {
        let mut p = Parser::new(src, false)?;
        let t = p.linterm()?;
        p.finish()?;
        Ok(t)
    }
}

impl Atom {
    pub fn parse(src: &str) -> Result<Atom, ParseError> {
        let mut p = Parser::new(src, false)?;
        let a = p.atom()?;
        p.finish()?;
        Ok(a)
    }
}

impl Formula {
    /// Parses the canonical rendering as well as hand-written formulas with
    /// the usual precedence (`!` binds tightest, then `&&`, `||`, `=>`).
    pub fn parse(src: &str) -> Result<Formula, ParseError> {
        let mut p = Parser::new(src, false)?;
        let f = p.formula()?;
        p.finish()?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Rel;

    #[test]
    fn renders_terms() {
        let t = LinTerm::from_parts([("x", 2), ("y", -1)], 3);
        assert_eq!(t.to_string(), "2*x - y + 3");
        assert_eq!(LinTerm::zero().to_string(), "0");
        assert_eq!(LinTerm::from_parts([("x", -1)], -4).to_string(), "-x - 4");
    }

    #[test]
    fn renders_formulas() {
        let a = Formula::atom(LinTerm::var("x").plus_constant(&1.into()), Rel::Le, LinTerm::constant(8));
        assert_eq!(a.to_string(), "(x + 1 <= 8)");
        let f = Formula::Implies(Box::new(Formula::Not(Box::new(a.clone()))), Box::new(Formula::False));
        assert_eq!(f.to_string(), "(!(x + 1 <= 8) => false)");
    }

    #[test]
    fn parses_with_precedence() {
        let f = Formula::parse("x <= 1 && y = 2 || !z > 0 => true").unwrap();
        assert!(matches!(f, Formula::Implies(..)));
        let g = Formula::parse(&f.to_string()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn parses_juxtaposed_coefficients() {
        assert_eq!(LinTerm::parse("2x - 3*y + 1").unwrap(), LinTerm::from_parts([("x", 2), ("y", -3)], 1));
    }

    #[test]
    fn reports_positions() {
        let e = Formula::parse("x <= 1 &&\n  (y + )").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
    }
}
