//! Brute-force ground truth for small programs.
//!
//! Every complete transition sequence is enumerated, including those whose
//! guards cannot hold. Each prefix is judged twice: symbolically, with the
//! decision procedure on the path formula, and concretely, by running every
//! initial valuation drawn from a box. The two must agree whenever the box
//! covers all initial valuations the assumptions allow.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::formula::{Formula, Int, LinTerm, Model, Rel, Solver, SolverError, Var};
use crate::model::{Init, Program, SymState, TransId};
use crate::por::{independent, Scope, SemiCommuteFact};

pub const DEFAULT_TRACE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("more than {0} traces")]
    TooManyTraces(usize),
    #[error("too many concrete initial valuations ({0})")]
    TooManyValuations(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("symbolic and concrete judgements differ on {what} after {trace:?}")]
    Disagreement { trace: Vec<TransId>, what: &'static str },
}

/// Integer range for the concrete values of unconstrained variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lo: i64,
    pub hi: i64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lo: 0, hi: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceInfo {
    pub trace: Vec<TransId>,
    /// Some initial valuation satisfies every guard along the trace.
    pub feasible: bool,
    /// No feasible prefix ends in a state violating the property.
    pub safe: bool,
}

/// All complete traces of a program with their judgements.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub traces: Vec<TraceInfo>,
    index: HashMap<Vec<TransId>, usize>,
}

impl Enumeration {
    pub fn get(&self, trace: &[TransId]) -> Option<&TraceInfo> {
        self.index.get(trace).map(|i| &self.traces[*i])
    }

    /// Whether some trace reaches a violation.
    pub fn is_unsafe(&self) -> bool {
        self.traces.iter().any(|t| !t.safe)
    }

    /// Trace coverage: if `rho1` is safe then so is `rho2`.
    pub fn covers(&self, rho1: &[TransId], rho2: &[TransId]) -> Option<bool> {
        Some(trace_covers(self.get(rho1)?.safe, self.get(rho2)?.safe))
    }
}

/// Coverage between two traces given their safety.
pub fn trace_covers(rho1_safe: bool, rho2_safe: bool) -> bool {
    !rho1_safe || rho2_safe
}

struct Node {
    trace_len: usize,
    parts_len: usize,
    versions: BTreeMap<Var, Var>,
    concrete: Vec<Model>,
    sym_feasible: bool,
    safe_so_far: bool,
}

fn versioned(v: &Var, k: usize) -> Var {
    Var::new(format!("{v}@{k}"))
}

// Version names contain `@`, so they never collide with program variables
// and substituting one variable at a time is safe.
fn rename(f: &Formula, map: &BTreeMap<Var, Var>) -> Formula {
    map.iter().fold(f.clone(), |g, (v, w)| g.substitute(v, &LinTerm::var(w.clone())))
}

fn rename_term(e: &LinTerm, map: &BTreeMap<Var, Var>) -> LinTerm {
    map.iter().fold(e.clone(), |g, (v, w)| g.substitute(v, &LinTerm::var(w.clone())))
}

/// Concrete initial valuations: declared values, unconstrained variables
/// ranging over `bounds`, filtered by the assumptions.
pub fn initial_valuations(p: &Program, bounds: Bounds) -> Result<Vec<Model>, OracleError> {
    let free: Vec<&Var> = p
        .vars
        .iter()
        .filter(|d| d.init == Init::Any)
        .map(|d| &d.name)
        .collect();
    let width = (bounds.hi - bounds.lo + 1).max(0) as usize;
    let total = width.checked_pow(free.len() as u32).unwrap_or(usize::MAX);
    if total > 1_000_000 {
        return Err(OracleError::TooManyValuations(total));
    }
    let mut out = Vec::new();
    for mut k in 0..total {
        let mut w = Model::new();
        for v in &free {
            w.insert((*v).clone(), Int::from(bounds.lo + (k % width) as i64));
            k /= width;
        }
        if let Some(m) = p.concrete_initial(&w) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Whether the assumptions confine every unconstrained variable to
/// `bounds`, so that concrete enumeration is exhaustive.
pub fn box_is_exhaustive(p: &Program, solver: &Solver, bounds: Bounds) -> Result<bool, SolverError> {
    let init = p.initial_constraint();
    for d in p.vars.iter().filter(|d| d.init == Init::Any) {
        let v = LinTerm::var(d.name.clone());
        let inside = Formula::conj([
            Formula::atom(v.clone(), Rel::Ge, LinTerm::constant(bounds.lo)),
            Formula::atom(v, Rel::Le, LinTerm::constant(bounds.hi)),
        ]);
        if !solver.entails(&init, &inside)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Enumerates all complete traces (at most `limit`).
pub fn enumerate_traces(p: &Program, bounds: Bounds, limit: usize) -> Result<Enumeration, OracleError> {
    let solver = Solver::default();
    let exact = box_is_exhaustive(p, &solver, bounds)?;
    let mut versions: BTreeMap<Var, Var> = p.vars.iter().map(|d| (d.name.clone(), versioned(&d.name, 0))).collect();
    let mut parts: Vec<Formula> = vec![rename(&p.initial_constraint(), &versions)];
    let mut trace: Vec<TransId> = Vec::new();
    let mut traces = Vec::new();

    let judge = |parts: &[Formula], versions: &BTreeMap<Var, Var>, concrete: &[Model], parent_feasible: bool, trace: &[TransId]| -> Result<(bool, bool), OracleError> {
        let sym_feasible = parent_feasible && solver.is_sat(&Formula::conj(parts.iter().cloned()))?.is_sat();
        let sym_violates = sym_feasible && {
            let bad = rename(&Formula::negation(p.property.clone()), versions);
            solver.is_sat(&Formula::conj(parts.iter().cloned().chain([bad])))?.is_sat()
        };
        let conc_feasible = !concrete.is_empty();
        let conc_violates = concrete.iter().any(|m| p.property.eval(m) == Some(false));
        let agree_f = if exact { sym_feasible == conc_feasible } else { sym_feasible || !conc_feasible };
        if !agree_f {
            return Err(OracleError::Disagreement { trace: trace.to_vec(), what: "feasibility" });
        }
        let agree_v = if exact { sym_violates == conc_violates } else { sym_violates || !conc_violates };
        if !agree_v {
            return Err(OracleError::Disagreement { trace: trace.to_vec(), what: "safety" });
        }
        Ok((sym_feasible, !sym_violates))
    };

    let init_vals = initial_valuations(p, bounds)?;
    let (f0, s0) = judge(&parts, &versions, &init_vals, true, &trace)?;
    let mut stack: Vec<(Node, Vec<TransId>)> = Vec::new();
    let root = Node {
        trace_len: 0,
        parts_len: parts.len(),
        versions: versions.clone(),
        concrete: init_vals,
        sym_feasible: f0,
        safe_so_far: s0,
    };
    let mut loc = p.initial_loc();
    let mut succ = p.schedulable(&loc);
    succ.reverse();
    stack.push((root, succ));
    while let Some((node, todo)) = stack.last_mut() {
        let Some(t) = todo.pop() else {
            let (node, _) = stack.pop().expect("nonempty");
            if node.trace_len > 0 {
                let last = trace.pop().expect("nonempty");
                let tr = p.transition(last);
                loc.0[tr.process] = tr.src;
            }
            continue;
        };
        trace.truncate(node.trace_len);
        parts.truncate(node.parts_len);
        versions.clone_from(&node.versions);
        let (parent_feasible, parent_safe) = (node.sym_feasible, node.safe_so_far);
        let concrete: Vec<Model> = node.concrete.iter().filter_map(|m| p.step_concrete(m, t)).collect();

        let tr = p.transition(t);
        parts.push(rename(&tr.guard_formula(), &versions));
        trace.push(t);
        if let Some((v, e)) = &tr.assign {
            let fresh = versioned(v, trace.len());
            parts.push(Formula::atom(LinTerm::var(fresh.clone()), Rel::Eq, rename_term(e, &versions)));
            versions.insert(v.clone(), fresh);
        }
        loc.0[tr.process] = tr.dst;
        let (feasible, safe_here) = judge(&parts, &versions, &concrete, parent_feasible, &trace)?;
        let safe = parent_safe && safe_here;
        let mut succ = p.schedulable(&loc);
        if succ.is_empty() {
            if traces.len() >= limit {
                return Err(OracleError::TooManyTraces(limit));
            }
            traces.push(TraceInfo {
                trace: trace.clone(),
                feasible,
                safe,
            });
        }
        succ.reverse();
        stack.push((
            Node {
                trace_len: trace.len(),
                parts_len: parts.len(),
                versions: versions.clone(),
                concrete,
                sym_feasible: feasible,
                safe_so_far: safe,
            },
            succ,
        ));
    }
    if traces.is_empty() {
        // A program without transitions has the empty trace only.
        traces.push(TraceInfo {
            trace: Vec::new(),
            feasible: f0,
            safe: s0,
        });
    }
    let index = traces.iter().enumerate().map(|(i, t)| (t.trace.clone(), i)).collect();
    Ok(Enumeration { traces, index })
}

/// Symbolic states along `trace`, starting with the initial state.
fn states_along(p: &Program, trace: &[TransId]) -> Vec<SymState> {
    let mut out = vec![p.initial_state()];
    for t in trace {
        let next = p.execute(out.last().expect("nonempty"), *t);
        out.push(next);
    }
    out
}

/// Checks a fact against the enumeration: whenever a safe trace passes a
/// state in scope that entails the fact's condition, swapping any later
/// adjacent occurrence of `left; right` must give a safe trace.
pub fn check_semi_commute(p: &Program, e: &Enumeration, fact: &SemiCommuteFact) -> Result<bool, OracleError> {
    let solver = Solver::default();
    for info in e.traces.iter().filter(|t| t.safe) {
        let tr = &info.trace;
        let pairs: Vec<usize> = (0..tr.len().saturating_sub(1))
            .filter(|&j| tr[j] == fact.left && tr[j + 1] == fact.right)
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let first = if fact.scope == Scope::All && fact.cond.is_true() {
            0
        } else {
            let states = states_along(p, &tr[..*pairs.last().expect("nonempty")]);
            let mut first = None;
            for (i, s) in states.iter().enumerate() {
                if fact.scope.contains(&s.loc) && solver.entails(&s.pc, &fact.cond)? {
                    first = Some(i);
                    break;
                }
            }
            let Some(first) = first else { continue };
            first
        };
        for &j in pairs.iter().filter(|&&j| j >= first) {
            let mut swapped = tr.clone();
            swapped.swap(j, j + 1);
            match e.get(&swapped) {
                Some(other) if other.safe => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Partition of all complete traces under swaps of adjacent independent
/// transitions of different processes.
pub fn mazurkiewicz_classes(p: &Program, e: &Enumeration) -> Vec<Vec<Vec<TransId>>> {
    let n = e.traces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, info) in e.traces.iter().enumerate() {
        let tr = &info.trace;
        for j in 0..tr.len().saturating_sub(1) {
            let (a, b) = (tr[j], tr[j + 1]);
            if p.transition(a).process == p.transition(b).process || !independent(p, a, b) {
                continue;
            }
            let mut swapped = tr.clone();
            swapped.swap(j, j + 1);
            if let Some(&k) = e.index.get(&swapped) {
                let (ri, rk) = (find(&mut parent, i), find(&mut parent, k));
                parent[ri] = rk;
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<Vec<TransId>>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(e.traces[i].trace.clone());
    }
    let mut out: Vec<Vec<Vec<TransId>>> = classes.into_values().collect();
    for c in &mut out {
        c.sort();
    }
    out.sort();
    out
}

/// A state of the full symbolic search tree together with whether its
/// whole subtree is free of violations.
#[derive(Clone, Debug)]
pub struct TreeState {
    pub state: SymState,
    pub subtree_safe: bool,
}

/// Every feasible state of the unpruned search tree (at most `limit`).
pub fn search_tree(p: &Program, solver: &Solver, limit: usize) -> Result<Vec<TreeState>, OracleError> {
    let mut out = Vec::new();
    subtree(p, solver, p.initial_state(), limit, &mut out)?;
    Ok(out)
}

fn subtree(p: &Program, solver: &Solver, s: SymState, limit: usize, out: &mut Vec<TreeState>) -> Result<bool, OracleError> {
    if out.len() >= limit {
        return Err(OracleError::TooManyTraces(limit));
    }
    let slot = out.len();
    out.push(TreeState {
        state: s.clone(),
        subtree_safe: true,
    });
    let mut safe = p.violates(solver, &s)?.is_none();
    for t in p.enabled(solver, &s)? {
        safe &= subtree(p, solver, p.execute(&s, t), limit, out)?;
    }
    out[slot].subtree_safe = safe;
    Ok(safe)
}

/// Whether every state at `loc` satisfying `psi` (reachable or not) has no
/// violation in any continuation: the unpruned search from `(loc, psi)`
/// finds nothing.
pub fn interpolant_is_sound(p: &Program, solver: &Solver, loc: &crate::model::GlobalLoc, psi: &Formula, limit: usize) -> Result<bool, OracleError> {
    let start = SymState {
        loc: loc.clone(),
        pc: psi.clone(),
        depth: 0,
    };
    let mut out = Vec::new();
    subtree(p, solver, start, limit, &mut out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{closely_coupled, parse, sum_of_ids};

    fn enumerate(p: &Program) -> Enumeration {
        enumerate_traces(p, Bounds::default(), DEFAULT_TRACE_LIMIT).unwrap()
    }

    #[test]
    fn coupled_traces() {
        let p = closely_coupled(false);
        let e = enumerate(&p);
        assert_eq!(e.traces.len(), 6);
        assert!(e.traces.iter().all(|t| t.feasible && t.safe));
        assert_eq!(mazurkiewicz_classes(&p, &e).len(), 6);
    }

    #[test]
    fn infeasible_traces_are_listed() {
        let p = parse("shared x = 0\nprocess P {\n 0 -> 1 : x := x + 1;\n 1 -> 2 : [x = 0] skip;\n}\nprocess Q {\n 0 -> 1 : skip;\n}\n").unwrap();
        let e = enumerate(&p);
        assert_eq!(e.traces.len(), 3);
        assert!(e.traces.iter().all(|t| !t.feasible));
        let chain = parse("shared x = *\nassume 0 <= x\nassume x <= 2\nprocess P {\n 0 -> 1 : [x = 1] skip;\n 1 -> 2 : skip;\n}\n").unwrap();
        let e = enumerate(&chain);
        assert_eq!(e.traces.len(), 1);
        assert!(e.traces[0].feasible);
    }

    #[test]
    fn coverage_table() {
        assert!(trace_covers(true, true));
        assert!(trace_covers(false, false));
        assert!(trace_covers(false, true));
        assert!(!trace_covers(true, false));
    }

    #[test]
    fn resource_facts_hold_and_fabricated_one_fails() {
        let p = closely_coupled(true);
        let e = enumerate(&p);
        let fact = |l, r| SemiCommuteFact {
            scope: Scope::All,
            cond: Formula::True,
            left: TransId(l),
            right: TransId(r),
        };
        assert!(check_semi_commute(&p, &e, &fact(0, 2)).unwrap());
        assert!(check_semi_commute(&p, &e, &fact(2, 0)).unwrap());

        let q = parse("shared r = 0\nproperty always r <= 0\nprocess A {\n 0 -> 1 : r := r - 1;\n}\nprocess B {\n 0 -> 1 : r := r + 1;\n}\n").unwrap();
        let e = enumerate(&q);
        assert!(!check_semi_commute(&q, &e, &fact(0, 1)).unwrap());
        assert!(check_semi_commute(&q, &e, &fact(1, 0)).unwrap());
    }

    #[test]
    fn independent_processes_form_one_class() {
        let p = parse("shared x = 0\nshared y = 0\nprocess A {\n 0 -> 1 : x := 1;\n}\nprocess B {\n 0 -> 1 : y := 1;\n}\n").unwrap();
        let classes = mazurkiewicz_classes(&p, &enumerate(&p));
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].len(), 2);
        let s = sum_of_ids(3).unwrap();
        assert_eq!(mazurkiewicz_classes(&s, &enumerate(&s)).len(), 6);
    }

    #[test]
    fn unbounded_inputs_only_check_one_direction() {
        let p = parse("shared x = *\nproperty always x <= 8\nprocess P {\n 0 -> 1 : skip;\n}\n").unwrap();
        let e = enumerate(&p);
        assert!(e.is_unsafe());
    }

    #[test]
    fn search_tree_marks_unsafe_subtrees() {
        let mut p = closely_coupled(false);
        p.property = Formula::parse("x <= 5").unwrap();
        let tree = search_tree(&p, &Solver::default(), 1000).unwrap();
        assert_eq!(tree.len(), 19);
        assert!(!tree[0].subtree_safe);
        assert!(tree.iter().any(|s| s.subtree_safe));
    }
}
