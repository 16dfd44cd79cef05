//! Quantifier-free linear integer arithmetic.
//!
//! Terms are linear combinations of integer variables with arbitrary-precision
//! coefficients. Formulas are boolean combinations of comparisons between
//! terms. Every value here is immutable once built; the operations are pure.

mod omega;
mod solver;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub use solver::{entails, is_sat, SatResult, Solver, SolverError, DEFAULT_BUDGET};
pub use text::ParseError;

/// Integer values and coefficients.
pub type Int = BigInt;

/// A variable name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

impl From<String> for Var {
    fn from(s: String) -> Self {
        Var::new(s)
    }
}

/// A linear term `c + a1*x1 + ... + an*xn`. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, Int>,
    constant: Int,
}

impl LinTerm {
    pub fn zero() -> Self {
        LinTerm::default()
    }

    pub fn constant(c: impl Into<Int>) -> Self {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn var(v: impl Into<Var>) -> Self {
        LinTerm::scaled_var(1, v)
    }

    pub fn scaled_var(c: impl Into<Int>, v: impl Into<Var>) -> Self {
        let mut t = LinTerm::zero();
        t.add_coeff(v.into(), c.into());
        t
    }

    /// Builds a term from `(coefficient, variable)` pairs and a constant.
    pub fn from_parts<V: Into<Var>, C: Into<Int>>(
        parts: impl IntoIterator<Item = (V, C)>,
        constant: impl Into<Int>,
    ) -> Self {
        let mut t = LinTerm::constant(constant);
        for (v, c) in parts {
            t.add_coeff(v.into(), c.into());
        }
        t
    }

    fn add_coeff(&mut self, v: Var, c: Int) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v.clone()).or_insert_with(Int::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: &Var) -> Int {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    pub fn constant_part(&self) -> &Int {
        &self.constant
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Var, &Int)> {
        self.coeffs.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.coeffs.contains_key(v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn plus(&self, other: &LinTerm) -> LinTerm {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.coeffs {
            out.add_coeff(v.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, other: &LinTerm) -> LinTerm {
        self.plus(&other.negated())
    }

    pub fn negated(&self) -> LinTerm {
        self.scaled(&-Int::one())
    }

    pub fn scaled(&self, k: &Int) -> LinTerm {
        if k.is_zero() {
            return LinTerm::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn plus_constant(&self, c: &Int) -> LinTerm {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// Replaces every occurrence of `v` by `e`.
    pub fn substitute(&self, v: &Var, e: &LinTerm) -> LinTerm {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                rest.plus(&e.scaled(c))
            }
        }
    }

    /// Evaluates under `m`; `None` if some variable is unassigned.
    pub fn eval(&self, m: &Model) -> Option<Int> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * m.get(v)?;
        }
        Some(acc)
    }

    /// Gcd of the variable coefficients (zero for constant terms).
    pub fn coeff_gcd(&self) -> Int {
        self.coeffs
            .values()
            .fold(Int::zero(), |g, c| g.gcd(c))
    }
}

impl fmt::Debug for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Comparison relation of an [`Atom`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Le => Rel::Gt,
            Rel::Lt => Rel::Ge,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn holds(self, lhs: &Int, rhs: &Int) -> bool {
        match self {
            Rel::Eq => lhs == rhs,
            Rel::Ne => lhs != rhs,
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }
}

/// `lhs rel rhs`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub lhs: LinTerm,
    pub rel: Rel,
    pub rhs: LinTerm,
}

/// An atom in integer normal form: `term = 0`, `term != 0` or `term <= 0`,
/// with coefficients divided by their gcd.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NormAtom {
    pub term: LinTerm,
    pub kind: NormKind,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum NormKind {
    Eq,
    Ne,
    Le,
}

impl NormAtom {
    /// Ground atoms decide to a constant.
    pub fn ground_value(&self) -> Option<bool> {
        if !self.term.is_constant() {
            return None;
        }
        let c = self.term.constant_part();
        Some(match self.kind {
            NormKind::Eq => c.is_zero(),
            NormKind::Ne => !c.is_zero(),
            NormKind::Le => !c.is_positive(),
        })
    }

    /// `t + c <rel> 0` written as `t <rel> -c`.
    pub fn to_bound(&self) -> Atom {
        let rel = match self.kind {
            NormKind::Eq => Rel::Eq,
            NormKind::Ne => Rel::Ne,
            NormKind::Le => Rel::Le,
        };
        let c = self.term.constant.clone();
        let lin = self.term.plus_constant(&-&c);
        Atom::new(lin, rel, LinTerm::constant(-c))
    }

    /// Normalizing an already normalized atom is the identity.
    pub fn to_atom(&self) -> Atom {
        let rel = match self.kind {
            NormKind::Eq => Rel::Eq,
            NormKind::Ne => Rel::Ne,
            NormKind::Le => Rel::Le,
        };
        Atom::new(self.term.clone(), rel, LinTerm::zero())
    }
}

impl Atom {
    pub fn new(lhs: LinTerm, rel: Rel, rhs: LinTerm) -> Self {
        Atom { lhs, rel, rhs }
    }

    pub fn negated(&self) -> Atom {
        Atom::new(self.lhs.clone(), self.rel.negate(), self.rhs.clone())
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.vars().chain(self.rhs.vars())
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.lhs.mentions(v) || self.rhs.mentions(v)
    }

    pub fn substitute(&self, v: &Var, e: &LinTerm) -> Atom {
        Atom::new(self.lhs.substitute(v, e), self.rel, self.rhs.substitute(v, e))
    }

    pub fn eval(&self, m: &Model) -> Option<bool> {
        Some(self.rel.holds(&self.lhs.eval(m)?, &self.rhs.eval(m)?))
    }

    /// Integer normal form. Strict comparisons become non-strict by shifting
    /// the constant, `>=`/`>` are flipped, and (dis)equalities get a positive
    /// leading coefficient.
    pub fn normalize(&self) -> NormAtom {
        let diff = self.lhs.minus(&self.rhs);
        let one = Int::one();
        let (mut term, kind) = match self.rel {
            Rel::Eq => (diff, NormKind::Eq),
            Rel::Ne => (diff, NormKind::Ne),
            Rel::Le => (diff, NormKind::Le),
            Rel::Lt => (diff.plus_constant(&one), NormKind::Le),
            Rel::Ge => (diff.negated(), NormKind::Le),
            Rel::Gt => (diff.negated().plus_constant(&one), NormKind::Le),
        };
        let g = term.coeff_gcd();
        if g.is_zero() {
            return NormAtom { term, kind };
        }
        match kind {
            NormKind::Le => {
                if !g.is_one() {
                    term = LinTerm {
                        coeffs: term.coeffs.iter().map(|(v, c)| (v.clone(), c / &g)).collect(),
                        constant: term.constant.div_ceil(&g),
                    };
                }
            }
            NormKind::Eq | NormKind::Ne => {
                if !term.constant.is_multiple_of(&g) {
                    // g*y + c = 0 has no integer solution when g does not divide c.
                    let value = kind == NormKind::Ne;
                    let c = if value { 0 } else { 1 };
                    return NormAtom {
                        term: LinTerm::constant(c),
                        kind: NormKind::Eq,
                    };
                }
                let lead_negative = term.coeffs.values().next().is_some_and(|c| c.is_negative());
                let divisor = if lead_negative { -g } else { g };
                if !divisor.is_one() {
                    term = LinTerm {
                        coeffs: term
                            .coeffs
                            .iter()
                            .map(|(v, c)| (v.clone(), c / &divisor))
                            .collect(),
                        constant: &term.constant / &divisor,
                    };
                }
            }
        }
        NormAtom { term, kind }
    }
}

/// A quantifier-free formula. Build through the constructors
/// ([`Formula::conj`], [`Formula::disj`], [`Formula::neg`],
/// [`Formula::implies`]) to keep `And`/`Or` lists at two or more children.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Self {
        Formula::Atom(a)
    }
}

impl Formula {
    pub fn atom(lhs: LinTerm, rel: Rel, rhs: LinTerm) -> Formula {
        Formula::Atom(Atom::new(lhs, rel, rhs))
    }

    /// Conjunction; drops `true`, absorbs `false`, flattens nested conjunctions.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(children) => out.extend(children),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction; dual of [`Formula::conj`].
    pub fn disj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(children) => out.extend(children),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn negation(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(f: Formula, g: Formula) -> Formula {
        match (f, g) {
            (Formula::True, g) => g,
            (Formula::False, _) => Formula::True,
            (_, Formula::True) => Formula::True,
            (f, Formula::False) => Formula::negation(f),
            (f, g) => Formula::Implies(Box::new(f), Box::new(g)),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::True => Vec::new(),
            Formula::And(children) => children.iter().collect(),
            other => vec![other],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.extend(a.vars().cloned()),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, v: &Var) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Atom(a) => a.mentions(v),
            Formula::Not(f) => f.mentions(v),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(|f| f.mentions(v)),
            Formula::Implies(a, b) => a.mentions(v) || b.mentions(v),
        }
    }

    /// Replaces every occurrence of `v` by `e`. The shape of the formula is
    /// preserved; no simplification happens.
    pub fn substitute(&self, v: &Var, e: &LinTerm) -> Formula {
        if !self.mentions(v) {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.substitute(v, e)),
            Formula::Not(f) => Formula::Not(Box::new(f.substitute(v, e))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(v, e)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(v, e)).collect()),
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.substitute(v, e)), Box::new(b.substitute(v, e)))
            }
        }
    }

    /// Exact evaluation; `None` if a free variable is unassigned.
    pub fn eval(&self, m: &Model) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(m)?,
            Formula::Not(f) => !f.eval(m)?,
            Formula::And(fs) => {
                let mut all = true;
                for f in fs {
                    all &= f.eval(m)?;
                }
                all
            }
            Formula::Or(fs) => {
                let mut any = false;
                for f in fs {
                    any |= f.eval(m)?;
                }
                any
            }
            Formula::Implies(a, b) => !a.eval(m)? || b.eval(m)?,
        })
    }

    /// Equivalence-preserving cleanup: folds ground atoms, absorbs
    /// `true`/`false`, flattens nested connectives, drops duplicate children
    /// (atoms compared in normal form) and detects `a` next to `!a`.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => match a.normalize().ground_value() {
                Some(true) => Formula::True,
                Some(false) => Formula::False,
                None => self.clone(),
            },
            Formula::Not(f) => match f.simplify() {
                Formula::Not(inner) => *inner,
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                other => Formula::Not(Box::new(other)),
            },
            Formula::And(fs) => simplify_nary(fs, true),
            Formula::Or(fs) => simplify_nary(fs, false),
            Formula::Implies(a, b) => {
                let a = a.simplify();
                let b = b.simplify();
                if a == b {
                    return Formula::True;
                }
                Formula::implies(a, b)
            }
        }
    }
}

/// Key used to identify equivalent children during simplification.
#[derive(PartialEq, Eq, Hash)]
enum ChildKey {
    Atom(NormAtom),
    NotAtom(NormAtom),
    Other(Formula),
}

fn child_key(f: &Formula) -> ChildKey {
    match f {
        Formula::Atom(a) => ChildKey::Atom(a.normalize()),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(a) => ChildKey::NotAtom(a.normalize()),
            _ => ChildKey::Other(f.clone()),
        },
        _ => ChildKey::Other(f.clone()),
    }
}

fn complement_key(key: &ChildKey) -> Option<ChildKey> {
    match key {
        ChildKey::Atom(n) => Some(ChildKey::NotAtom(n.clone())),
        ChildKey::NotAtom(n) => Some(ChildKey::Atom(n.clone())),
        ChildKey::Other(_) => None,
    }
}

fn simplify_nary(fs: &[Formula], is_and: bool) -> Formula {
    // `unit` is the neutral element, `zero` the absorbing one.
    let (unit, zero) = if is_and {
        (Formula::True, Formula::False)
    } else {
        (Formula::False, Formula::True)
    };
    let mut seen: HashSet<ChildKey> = HashSet::new();
    let mut out = Vec::new();
    let mut stack: Vec<Formula> = fs.iter().rev().map(Formula::simplify).collect();
    while let Some(f) = stack.pop() {
        if f == unit {
            continue;
        }
        if f == zero {
            return zero;
        }
        match f {
            Formula::And(children) if is_and => stack.extend(children.into_iter().rev()),
            Formula::Or(children) if !is_and => stack.extend(children.into_iter().rev()),
            f => {
                let key = child_key(&f);
                if let Some(c) = complement_key(&key) {
                    if seen.contains(&c) {
                        return zero;
                    }
                }
                if seen.insert(key) {
                    out.push(f);
                }
            }
        }
    }
    let mut out = merge_bounds(out, is_and);
    match out.len() {
        0 => unit,
        1 => out.pop().unwrap(),
        _ if is_and => Formula::And(out),
        _ => Formula::Or(out),
    }
}

/// Among `t + c <= 0` children sharing the same linear part `t`, keeps the
/// tightest (conjunction) or loosest (disjunction) one.
fn merge_bounds(children: Vec<Formula>, is_and: bool) -> Vec<Formula> {
    struct Group {
        winner: usize,
        constant: Int,
        size: usize,
    }
    let mut groups: BTreeMap<Vec<(Var, Int)>, Group> = BTreeMap::new();
    let mut group_of: BTreeMap<usize, Vec<(Var, Int)>> = BTreeMap::new();
    for (i, f) in children.iter().enumerate() {
        let Formula::Atom(a) = f else { continue };
        let n = a.normalize();
        if n.kind != NormKind::Le || n.term.is_constant() {
            continue;
        }
        let key: Vec<(Var, Int)> = n.term.coeffs.iter().map(|(v, c)| (v.clone(), c.clone())).collect();
        let c = n.term.constant;
        group_of.insert(i, key.clone());
        let g = groups.entry(key).or_insert(Group {
            winner: i,
            constant: c.clone(),
            size: 0,
        });
        g.size += 1;
        if (is_and && c > g.constant) || (!is_and && c < g.constant) {
            g.winner = i;
            g.constant = c;
        }
    }
    if groups.values().all(|g| g.size == 1) {
        return children;
    }
    children
        .into_iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let Some(g) = group_of.get(&i).map(|k| &groups[k]) else {
                return Some(f);
            };
            match (g.winner == i, g.size) {
                (false, _) => None,
                (true, 1) => Some(f),
                (true, _) => match &f {
                    Formula::Atom(a) => Some(Formula::Atom(a.normalize().to_bound())),
                    _ => unreachable!("grouped children are atoms"),
                },
            }
        })
        .collect()
}

/// An assignment of integer values to variables.
#[derive(Clone, PartialEq, Eq, Default, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model(#[serde(with = "model_serde")] BTreeMap<Var, Int>);

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn get(&self, v: &Var) -> Option<&Int> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Var, value: Int) {
        self.0.insert(v, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Int)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<V: Into<Var>, I: Into<Int>> FromIterator<(V, I)> for Model {
    fn from_iter<T: IntoIterator<Item = (V, I)>>(iter: T) -> Self {
        Model(iter.into_iter().map(|(v, i)| (v.into(), i.into())).collect())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, x)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {x}")?;
        }
        f.write_str("}")
    }
}

/// Witness values are JSON numbers when they fit in 64 bits and decimal
/// strings otherwise.
mod model_serde {
    use super::{Int, Var};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Var, Int>, s: S) -> Result<S::Ok, S::Error> {
        let out: BTreeMap<&str, Value> = m
            .iter()
            .map(|(k, v)| {
                let value = match i64::try_from(v) {
                    Ok(n) => Value::from(n),
                    Err(_) => Value::from(v.to_string()),
                };
                (k.as_str(), value)
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Var, Int>, D::Error> {
        let raw: BTreeMap<String, Value> = BTreeMap::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let n = match &v {
                    Value::Number(n) => n
                        .as_i64()
                        .map(Int::from)
                        .ok_or_else(|| D::Error::custom("witness value is not an integer"))?,
                    Value::String(s) => s.parse::<Int>().map_err(D::Error::custom)?,
                    _ => return Err(D::Error::custom("witness value is not an integer")),
                };
                Ok((Var::new(k), n))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> LinTerm {
        LinTerm::var("x")
    }

    fn c(n: i64) -> LinTerm {
        LinTerm::constant(n)
    }

    #[test]
    fn linterm_drops_zero_coefficients() {
        let t = x().plus(&x().negated());
        assert!(t.is_constant());
        assert_eq!(t.coeffs().count(), 0);
    }

    #[test]
    fn substitute_examples() {
        let le8 = Formula::atom(x(), Rel::Le, c(8));
        let plus1 = x().plus(&c(1));
        assert_eq!(
            le8.substitute(&"x".into(), &plus1),
            Formula::atom(plus1.clone(), Rel::Le, c(8))
        );

        let y0 = Formula::atom(LinTerm::var("y"), Rel::Eq, c(0));
        assert_eq!(y0.substitute(&"x".into(), &LinTerm::scaled_var(2, "x")), y0);

        let two_x = LinTerm::scaled_var(2, "x");
        let both = Formula::conj([le8.clone(), Formula::atom(x(), Rel::Ge, c(0))]);
        assert_eq!(
            both.substitute(&"x".into(), &two_x),
            Formula::conj([
                Formula::atom(two_x.clone(), Rel::Le, c(8)),
                Formula::atom(two_x, Rel::Ge, c(0)),
            ])
        );
    }

    #[test]
    fn simplify_examples() {
        let le8 = Formula::atom(x(), Rel::Le, c(8));
        assert_eq!(Formula::And(vec![le8.clone(), Formula::True]).simplify(), le8);
        assert_eq!(Formula::And(vec![le8.clone(), le8.clone()]).simplify(), le8);
        assert_eq!(Formula::atom(c(0), Rel::Le, c(1)).simplify(), Formula::True);
        assert_eq!(
            Formula::And(vec![le8.clone(), Formula::Not(Box::new(le8.clone()))]).simplify(),
            Formula::False
        );
    }

    #[test]
    fn constructors() {
        assert_eq!(Formula::conj([Formula::True]), Formula::True);
        assert_eq!(Formula::negation(Formula::False), Formula::True);
        assert_eq!(Formula::disj([]), Formula::False);
        let a = Formula::atom(x(), Rel::Eq, c(0));
        assert_eq!(Formula::implies(a.clone(), Formula::False), Formula::negation(a));
    }

    #[test]
    fn normalize_is_idempotent_on_examples() {
        let atoms = [
            Atom::new(LinTerm::scaled_var(3, "x"), Rel::Lt, c(10)),
            Atom::new(LinTerm::scaled_var(-2, "x"), Rel::Eq, LinTerm::scaled_var(4, "y")),
            Atom::new(LinTerm::scaled_var(2, "x"), Rel::Eq, c(1)),
            Atom::new(x(), Rel::Gt, LinTerm::var("y")),
        ];
        for a in atoms {
            let n = a.normalize();
            assert_eq!(n.to_atom().normalize(), n);
        }
    }

    #[test]
    fn normalize_tightens_integer_bounds() {
        // 3x < 10  <=>  x <= 3
        let n = Atom::new(LinTerm::scaled_var(3, "x"), Rel::Lt, c(10)).normalize();
        assert_eq!(n.term, x().plus(&c(-3)));
        assert_eq!(n.kind, NormKind::Le);
        // 2x = 1 has no integer solution
        let n = Atom::new(LinTerm::scaled_var(2, "x"), Rel::Eq, c(1)).normalize();
        assert_eq!(n.ground_value(), Some(false));
    }

    #[test]
    fn model_json_uses_numbers() {
        let m: Model = [("x", 3), ("y", -2)].into_iter().collect();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"x":3,"y":-2}"#);
        let back: Model = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
