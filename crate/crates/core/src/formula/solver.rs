//! Satisfiability and entailment for quantifier-free linear integer formulas.
//!
//! The formula is put in negation normal form over normalized atoms; `!=`
//! becomes a disjunction of two strict bounds. Disjunctions are then split
//! lazily (a disjunctive-normal-form walk with unit propagation) and each
//! branch is checked for integer feasibility with the Omega test.

use std::collections::BTreeMap;
use std::rc::Rc;

use num_traits::{One, Zero};
use thiserror::Error;

use super::omega::{self, Budget, Exhausted, Problem, Row};
use super::{Formula, Int, LinTerm, Model, NormAtom, NormKind, Var};

/// Default number of decision steps (generated conjuncts plus elimination
/// steps) before a query gives up.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver budget of {0} steps exhausted")]
    ResourceLimit(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(self) -> Option<Model> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }
}

/// Decision procedure configuration. Stateless apart from the budget, so one
/// value can be shared freely across threads.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    pub budget: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            budget: DEFAULT_BUDGET,
        }
    }
}

/// [`Solver::is_sat`] with the default budget.
pub fn is_sat(f: &Formula) -> Result<SatResult, SolverError> {
    Solver::default().is_sat(f)
}

/// [`Solver::entails`] with the default budget.
pub fn entails(f: &Formula, g: &Formula) -> Result<bool, SolverError> {
    Solver::default().entails(f, g)
}

impl Solver {
    pub fn with_budget(budget: u64) -> Self {
        Solver { budget }
    }

    pub fn is_sat(&self, f: &Formula) -> Result<SatResult, SolverError> {
        let nnf = to_nnf(f, true);
        let mut search = Search {
            vars: BTreeMap::new(),
            names: Vec::new(),
            budget: Budget {
                remaining: self.budget,
            },
        };
        let found = search
            .run(vec![nnf], Vec::new())
            .map_err(|Exhausted| SolverError::ResourceLimit(self.budget))?;
        Ok(match found {
            None => SatResult::Unsat,
            Some(values) => {
                let mut model = Model::new();
                for v in f.free_vars() {
                    model.insert(v, Int::zero());
                }
                for (i, name) in search.names.iter().enumerate() {
                    if let Some(x) = values.get(i) {
                        model.insert(name.clone(), x.clone());
                    }
                }
                debug_assert_eq!(f.eval(&model), Some(true), "model does not satisfy {f}");
                SatResult::Sat(model)
            }
        })
    }

    /// `f |= g`, decided as unsatisfiability of `f && !g`.
    pub fn entails(&self, f: &Formula, g: &Formula) -> Result<bool, SolverError> {
        if g.is_true() || f.is_false() {
            return Ok(true);
        }
        let query = Formula::conj([f.clone(), Formula::negation(g.clone())]);
        Ok(!self.is_sat(&query)?.is_sat())
    }
}

/// Negation normal form over normalized atoms.
#[derive(Debug, Clone)]
enum Nnf {
    True,
    False,
    Lit(NormAtom),
    And(Rc<[Nnf]>),
    Or(Rc<[Nnf]>),
}

fn lit(n: NormAtom) -> Nnf {
    match n.ground_value() {
        Some(true) => Nnf::True,
        Some(false) => Nnf::False,
        None => match n.kind {
            NormKind::Ne => {
                // t != 0  <=>  t + 1 <= 0  ||  -t + 1 <= 0
                let one = Int::one();
                Nnf::Or(Rc::from([
                    Nnf::Lit(NormAtom {
                        term: n.term.plus_constant(&one),
                        kind: NormKind::Le,
                    }),
                    Nnf::Lit(NormAtom {
                        term: n.term.negated().plus_constant(&one),
                        kind: NormKind::Le,
                    }),
                ]))
            }
            _ => Nnf::Lit(n),
        },
    }
}

/// Negation of a literal, as a literal or a two-way disjunction.
fn negate_lit(n: &NormAtom) -> Nnf {
    match n.kind {
        // !(t <= 0)  <=>  -t + 1 <= 0
        NormKind::Le => lit(NormAtom {
            term: n.term.negated().plus_constant(&Int::one()),
            kind: NormKind::Le,
        }),
        NormKind::Eq => lit(NormAtom {
            term: n.term.clone(),
            kind: NormKind::Ne,
        }),
        NormKind::Ne => lit(NormAtom {
            term: n.term.clone(),
            kind: NormKind::Eq,
        }),
    }
}

fn to_nnf(f: &Formula, positive: bool) -> Nnf {
    match (f, positive) {
        (Formula::True, true) | (Formula::False, false) => Nnf::True,
        (Formula::True, false) | (Formula::False, true) => Nnf::False,
        (Formula::Atom(a), true) => lit(a.normalize()),
        (Formula::Atom(a), false) => lit(a.negated().normalize()),
        (Formula::Not(g), p) => to_nnf(g, !p),
        (Formula::And(fs), true) | (Formula::Or(fs), false) => {
            Nnf::And(fs.iter().map(|g| to_nnf(g, positive)).collect())
        }
        (Formula::Or(fs), true) | (Formula::And(fs), false) => {
            Nnf::Or(fs.iter().map(|g| to_nnf(g, positive)).collect())
        }
        (Formula::Implies(a, b), true) => Nnf::Or(Rc::from([to_nnf(a, false), to_nnf(b, true)])),
        (Formula::Implies(a, b), false) => Nnf::And(Rc::from([to_nnf(a, true), to_nnf(b, false)])),
    }
}

struct Search {
    vars: BTreeMap<Var, usize>,
    names: Vec<Var>,
    budget: Budget,
}

impl Search {
    fn index(&mut self, v: &Var) -> usize {
        if let Some(&i) = self.vars.get(v) {
            return i;
        }
        let i = self.names.len();
        self.vars.insert(v.clone(), i);
        self.names.push(v.clone());
        i
    }

    fn row(&mut self, t: &LinTerm) -> Row {
        let entries: Vec<(usize, Int)> = t.coeffs().map(|(v, c)| (self.index(v), c.clone())).collect();
        let mut coeffs = vec![Int::zero(); self.names.len()];
        for (i, c) in entries {
            coeffs[i] = c;
        }
        Row {
            coeffs,
            constant: t.constant_part().clone(),
        }
    }

    fn feasible<'a>(&mut self, lits: impl IntoIterator<Item = &'a NormAtom>) -> Result<Option<Vec<Int>>, Exhausted> {
        let mut eqs = Vec::new();
        let mut geqs = Vec::new();
        for l in lits {
            let row = self.row(&l.term);
            match l.kind {
                NormKind::Eq => eqs.push(row),
                // t <= 0  <=>  -t >= 0
                NormKind::Le => geqs.push(row.negated()),
                NormKind::Ne => unreachable!("disequalities are split before solving"),
            }
        }
        let nvars = self.names.len();
        for r in eqs.iter_mut().chain(geqs.iter_mut()) {
            r.coeffs.resize(nvars, Int::zero());
        }
        omega::solve(Problem { nvars, eqs, geqs }, &mut self.budget)
    }

    /// Evaluates `f` under `solution`, reading unknown variables as 0.
    fn holds(&self, f: &Nnf, solution: &[Int]) -> bool {
        match f {
            Nnf::True => true,
            Nnf::False => false,
            Nnf::Lit(l) => {
                let zero = Int::zero();
                let mut v = l.term.constant_part().clone();
                for (x, c) in l.term.coeffs() {
                    let value = self.vars.get(x).and_then(|&i| solution.get(i)).unwrap_or(&zero);
                    v += c * value;
                }
                match l.kind {
                    NormKind::Eq => v.is_zero(),
                    NormKind::Le => v <= zero,
                    NormKind::Ne => !v.is_zero(),
                }
            }
            Nnf::And(fs) => fs.iter().all(|g| self.holds(g, solution)),
            Nnf::Or(fs) => fs.iter().any(|g| self.holds(g, solution)),
        }
    }

    /// Depth-first walk over the disjunctive normal form of the conjunction
    /// of `todo`, with `lits` already collected. Literal disjuncts that
    /// contradict `lits` are dropped before branching, a disjunction left
    /// with one disjunct is asserted outright, and branching happens on the
    /// smallest disjunction the current solution falsifies. Each branch also
    /// asserts the negation of the literal branches tried before it.
    fn run(&mut self, mut todo: Vec<Nnf>, mut lits: Vec<NormAtom>) -> Result<Option<Vec<Int>>, Exhausted> {
        let mut ors: Vec<Vec<Nnf>> = Vec::new();
        loop {
            while let Some(f) = todo.pop() {
                match f {
                    Nnf::True => {}
                    Nnf::False => return Ok(None),
                    Nnf::Lit(l) => {
                        if !lits.contains(&l) {
                            lits.push(l);
                        }
                    }
                    Nnf::And(fs) => todo.extend(fs.iter().cloned()),
                    Nnf::Or(fs) => ors.push(fs.to_vec()),
                }
            }
            self.budget.tick()?;
            let Some(solution) = self.feasible(&lits)? else {
                return Ok(None);
            };
            if ors.is_empty() {
                return Ok(Some(solution));
            }
            let mut remaining = Vec::with_capacity(ors.len());
            for or in std::mem::take(&mut ors) {
                let mut keep = Vec::with_capacity(or.len());
                let mut satisfied = false;
                for d in or {
                    match &d {
                        Nnf::True => satisfied = true,
                        Nnf::False => {}
                        Nnf::Lit(l) if lits.contains(l) => satisfied = true,
                        Nnf::Lit(l) => {
                            if self.feasible(lits.iter().chain([l]))?.is_some() {
                                keep.push(d);
                            }
                        }
                        _ => keep.push(d),
                    }
                    if satisfied {
                        break;
                    }
                }
                match keep.len() {
                    _ if satisfied => {}
                    0 => return Ok(None),
                    1 => todo.extend(keep),
                    _ => remaining.push(keep),
                }
            }
            if !todo.is_empty() {
                todo.extend(remaining.into_iter().map(|or| Nnf::Or(or.into())));
                continue;
            }
            // Only disjunctions the current solution falsifies need a split.
            let Some(pick) = (0..remaining.len())
                .filter(|&i| !remaining[i].iter().any(|d| self.holds(d, &solution)))
                .min_by_key(|&i| remaining[i].len())
            else {
                return Ok(Some(solution));
            };
            let choice = remaining.swap_remove(pick);
            let rest: Vec<Nnf> = remaining.into_iter().map(|or| Nnf::Or(or.into())).collect();
            let mut excluded: Vec<Nnf> = Vec::new();
            for branch in choice {
                let mut next = rest.clone();
                next.extend(excluded.iter().cloned());
                if let Nnf::Lit(l) = &branch {
                    excluded.push(negate_lit(l));
                }
                next.push(branch);
                if let Some(sol) = self.run(next, lits.clone())? {
                    return Ok(Some(sol));
                }
            }
            return Ok(None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        Formula::parse(s).unwrap()
    }

    fn brute_sat(g: &Formula, vars: &[&str], lo: i64, hi: i64) -> bool {
        fn go(g: &Formula, vars: &[&str], m: &mut Model, lo: i64, hi: i64) -> bool {
            let Some((v, rest)) = vars.split_first() else {
                return g.eval(m) == Some(true);
            };
            (lo..=hi).any(|x| {
                m.insert(Var::new(v), x.into());
                go(g, rest, m, lo, hi)
            })
        }
        go(g, vars, &mut Model::new(), lo, hi)
    }

    #[test]
    fn trivial_cases() {
        assert!(!is_sat(&f("x <= 1 && x >= 2")).unwrap().is_sat());
        let m = is_sat(&f("x = 0")).unwrap().model().unwrap();
        assert_eq!(m.get(&Var::new("x")), Some(&Int::zero()));
        assert!(!is_sat(&f("2*x = 1")).unwrap().is_sat());
    }

    #[test]
    fn doubled_increment_stays_bounded() {
        let g = f("x = 0 && x1 = 2*x + 1 && !(x1 <= 8)");
        assert!(!brute_sat(&g, &["x", "x1"], -20, 20));
        assert!(!is_sat(&g).unwrap().is_sat());
    }

    #[test]
    fn entailment_examples() {
        assert!(entails(&f("x = 0"), &f("x <= 8")).unwrap());
        assert!(!entails(&f("x <= 8"), &f("x = 0")).unwrap());
        let lhs = f("x = 3 && y = x");
        let rhs = f("y >= 0 && y <= 8");
        let brute = !brute_sat(&Formula::conj([lhs.clone(), Formula::negation(rhs.clone())]), &["x", "y"], -10, 10);
        assert!(brute);
        assert!(entails(&lhs, &rhs).unwrap());
    }

    #[test]
    fn disequalities_split() {
        let g = f("x != 0 && x >= 0 && x <= 1");
        let m = is_sat(&g).unwrap().model().unwrap();
        assert_eq!(m.get(&Var::new("x")), Some(&Int::from(1)));
        assert!(!is_sat(&f("x != 0 && x != 1 && x >= 0 && x <= 1")).unwrap().is_sat());
    }

    #[test]
    fn budget_exhaustion_is_not_unsat() {
        let g = f("(a = 0 || a = 1) && (b = 0 || b = 1) && (c = 0 || c = 1) && a + b + c = 7");
        assert_eq!(Solver::with_budget(3).is_sat(&g), Err(SolverError::ResourceLimit(3)));
        assert!(!Solver::default().is_sat(&g).unwrap().is_sat());
    }

    #[test]
    fn unconstrained_free_variables_appear_in_models() {
        let m = is_sat(&f("x <= 3 || y = 2")).unwrap().model().unwrap();
        assert!(m.get(&Var::new("x")).is_some() && m.get(&Var::new("y")).is_some());
    }
}
