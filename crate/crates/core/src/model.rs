//! Programs as sets of processes with acyclic local control flow, and their
//! symbolic and concrete transition semantics.
//!
//! A symbolic state pairs a global program point with a path constraint over
//! the current values of the program variables. Executing an assignment
//! renames the overwritten variable to a versioned copy, conjoins the guard
//! and the defining equality, and then eliminates the old copy whenever an
//! equality with a unit coefficient allows exact substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Atom, Formula, Int, LinTerm, Model, NormKind, Rel, SatResult, Solver, SolverError, Var};

/// Index of a transition in [`Program::transitions`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransId(pub usize);

impl fmt::Display for TransId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// A guarded assignment `[guard] var := expr` from `src` to `dst`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub id: TransId,
    pub process: usize,
    pub src: u32,
    pub dst: u32,
    pub guard: Vec<Atom>,
    pub assign: Option<(Var, LinTerm)>,
}

impl Transition {
    pub fn guard_formula(&self) -> Formula {
        Formula::conj(self.guard.iter().cloned().map(Formula::Atom))
    }

    pub fn is_unguarded(&self) -> bool {
        self.guard.iter().all(|a| a.normalize().ground_value() == Some(true))
    }

    /// Variables read by the guard or the right-hand side.
    pub fn reads(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.guard.iter().flat_map(|a| a.vars().cloned()).collect();
        if let Some((_, e)) = &self.assign {
            out.extend(e.vars().cloned());
        }
        out
    }

    pub fn writes(&self) -> BTreeSet<Var> {
        self.assign.iter().map(|(v, _)| v.clone()).collect()
    }

    /// Weakest precondition `guard -> phi[var := expr]`.
    pub fn pre(&self, phi: &Formula) -> Formula {
        let post = match &self.assign {
            Some((v, e)) => phi.substitute(v, e),
            None => phi.clone(),
        };
        Formula::implies(self.guard_formula(), post)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Process {
    pub index: usize,
    pub name: String,
    pub locations: BTreeSet<u32>,
    pub initial: u32,
    pub transitions: Vec<TransId>,
}

/// Initial value of a variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Init {
    Value(Int),
    /// Unconstrained (`*`), possibly restricted by `assume` lines.
    Any,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarDecl {
    pub name: Var,
    pub init: Init,
    /// Process index for locals, `None` for shared variables.
    pub owner: Option<usize>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Annotation {
    /// A counter only ever changed by `r := r + c`, `r := 2*r`, `r := r - c`
    /// and never read by a guard, with upper bound `var <= bound` in the
    /// property.
    Resource { var: Var, bound: LinTerm },
    /// A variable that once set to 1 stays 1.
    Flag(Var),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(Var),
    #[error("process `{0}` declared twice")]
    DuplicateProcess(String),
    #[error("undeclared variable `{var}` in {place}")]
    UndeclaredVariable { var: Var, place: String },
    #[error("local `{var}` of process `{owner}` is used by process `{user}`")]
    ForeignLocal { var: Var, owner: String, user: String },
    #[error("local `{0}` must be named `<process>.<name>` after a declared process")]
    BadLocalName(Var),
    #[error("transition {id} of `{process}` loops on location {loc}")]
    SelfLoop { id: TransId, process: String, loc: u32 },
    #[error("control flow of process `{0}` contains a cycle")]
    Cycle(String),
    #[error("resource variable `{var}` is read by the guard of {id}")]
    ResourceInGuard { var: Var, id: TransId },
    #[error("variable `{0}` is annotated more than once")]
    DuplicateAnnotation(Var),
    #[error("transition table is malformed: {0}")]
    Malformed(String),
}

/// A closed concurrent program with a safety property `always property`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Program {
    pub vars: Vec<VarDecl>,
    pub assumptions: Vec<Atom>,
    pub processes: Vec<Process>,
    pub transitions: Vec<Transition>,
    pub property: Formula,
    pub annotations: Vec<Annotation>,
}

/// One local location per process.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GlobalLoc(pub Vec<u32>);

impl fmt::Display for GlobalLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// A symbolic state: program point plus path constraint.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymState {
    pub loc: GlobalLoc,
    pub pc: Formula,
    pub depth: usize,
}

/// Incremental construction of a [`Program`]; [`ProgramBuilder::build`]
/// validates every well-formedness rule.
#[derive(Default, Debug, Clone)]
pub struct ProgramBuilder {
    vars: Vec<VarDecl>,
    locals: Vec<(String, Var, Init)>,
    assumptions: Vec<Atom>,
    processes: Vec<String>,
    transitions: Vec<Transition>,
    property: Option<Formula>,
    annotations: Vec<Annotation>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared(&mut self, name: impl Into<Var>, init: Init) -> &mut Self {
        self.vars.push(VarDecl {
            name: name.into(),
            init,
            owner: None,
        });
        self
    }

    /// Declares `process.name`; the process may be added later.
    pub fn local(&mut self, process: &str, name: &str, init: Init) -> &mut Self {
        self.locals
            .push((process.to_string(), Var::new(format!("{process}.{name}")), init));
        self
    }

    pub fn assume(&mut self, a: Atom) -> &mut Self {
        self.assumptions.push(a);
        self
    }

    pub fn process(&mut self, name: &str) -> usize {
        self.processes.push(name.to_string());
        self.processes.len() - 1
    }

    pub fn transition(
        &mut self,
        process: usize,
        src: u32,
        dst: u32,
        guard: Vec<Atom>,
        assign: Option<(Var, LinTerm)>,
    ) -> TransId {
        let id = TransId(self.transitions.len());
        self.transitions.push(Transition {
            id,
            process,
            src,
            dst,
            guard,
            assign,
        });
        id
    }

    pub fn property(&mut self, f: Formula) -> &mut Self {
        self.property = Some(f);
        self
    }

    pub fn annotate(&mut self, a: Annotation) -> &mut Self {
        self.annotations.push(a);
        self
    }

    pub fn build(&self) -> Result<Program, ModelError> {
        let mut vars = self.vars.clone();
        for (proc_name, name, init) in &self.locals {
            let owner = self
                .processes
                .iter()
                .position(|p| p == proc_name)
                .ok_or_else(|| ModelError::BadLocalName(name.clone()))?;
            vars.push(VarDecl {
                name: name.clone(),
                init: init.clone(),
                owner: Some(owner),
            });
        }
        let mut processes: Vec<Process> = self
            .processes
            .iter()
            .enumerate()
            .map(|(index, name)| Process {
                index,
                name: name.clone(),
                locations: BTreeSet::new(),
                initial: 0,
                transitions: Vec::new(),
            })
            .collect();
        for t in &self.transitions {
            let proc = processes
                .get_mut(t.process)
                .ok_or_else(|| ModelError::Malformed(format!("{} names process {}", t.id, t.process)))?;
            proc.locations.insert(t.src);
            proc.locations.insert(t.dst);
            proc.transitions.push(t.id);
        }
        for p in &mut processes {
            if p.locations.is_empty() {
                p.locations.insert(0);
            }
            p.initial = *p.locations.first().expect("nonempty");
        }
        // Resources before flags, each in declaration order.
        let mut annotations = self.annotations.clone();
        annotations.sort_by_key(|a| matches!(a, Annotation::Flag(_)));
        let program = Program {
            vars,
            assumptions: self.assumptions.clone(),
            processes,
            transitions: self.transitions.clone(),
            property: self.property.clone().unwrap_or(Formula::True),
            annotations,
        };
        program.validate()?;
        Ok(program)
    }
}

impl Program {
    /// Checks every structural invariant; called by the builder and the
    /// parser.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = BTreeSet::new();
        for d in &self.vars {
            if !names.insert(d.name.clone()) {
                return Err(ModelError::DuplicateVariable(d.name.clone()));
            }
        }
        let mut pnames = BTreeSet::new();
        for (i, p) in self.processes.iter().enumerate() {
            if p.index != i {
                return Err(ModelError::Malformed(format!("process `{}` has index {}", p.name, p.index)));
            }
            if !pnames.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateProcess(p.name.clone()));
            }
        }
        for d in &self.vars {
            if let Some(o) = d.owner {
                let ok = self
                    .processes
                    .get(o)
                    .is_some_and(|p| d.name.as_str().strip_prefix(p.name.as_str()).is_some_and(|r| r.starts_with('.')));
                if !ok {
                    return Err(ModelError::BadLocalName(d.name.clone()));
                }
            }
        }
        let declared = |v: &Var, place: &dyn Fn() -> String| -> Result<(), ModelError> {
            if names.contains(v) {
                Ok(())
            } else {
                Err(ModelError::UndeclaredVariable {
                    var: v.clone(),
                    place: place(),
                })
            }
        };
        for a in &self.assumptions {
            for v in a.vars() {
                declared(v, &|| "an assumption".into())?;
            }
        }
        for v in self.property.free_vars() {
            declared(&v, &|| "the property".into())?;
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.id != TransId(i) || t.process >= self.processes.len() {
                return Err(ModelError::Malformed(format!("entry {i} has id {}", t.id)));
            }
            let pname = &self.processes[t.process].name;
            if t.src == t.dst {
                return Err(ModelError::SelfLoop {
                    id: t.id,
                    process: pname.clone(),
                    loc: t.src,
                });
            }
            for v in t.reads().iter().chain(t.writes().iter()) {
                declared(v, &|| format!("transition {} of `{pname}`", t.id))?;
                let decl = self.decl(v).expect("declared");
                if let Some(o) = decl.owner {
                    if o != t.process {
                        return Err(ModelError::ForeignLocal {
                            var: v.clone(),
                            owner: self.processes[o].name.clone(),
                            user: pname.clone(),
                        });
                    }
                }
            }
        }
        for p in &self.processes {
            if !p.transitions.iter().all(|id| self.transitions.get(id.0).is_some_and(|t| t.process == p.index)) {
                return Err(ModelError::Malformed(format!("process `{}` lists foreign transitions", p.name)));
            }
            self.check_acyclic(p)?;
        }
        let mut annotated = BTreeSet::new();
        for a in &self.annotations {
            let v = match a {
                Annotation::Resource { var, bound } => {
                    for b in bound.vars() {
                        declared(b, &|| format!("the bound of resource `{var}`"))?;
                    }
                    var
                }
                Annotation::Flag(var) => var,
            };
            declared(v, &|| "an annotation".into())?;
            if !annotated.insert(v.clone()) {
                return Err(ModelError::DuplicateAnnotation(v.clone()));
            }
            if let Annotation::Resource { var, .. } = a {
                for t in &self.transitions {
                    if t.guard.iter().any(|g| g.mentions(var)) {
                        return Err(ModelError::ResourceInGuard { var: var.clone(), id: t.id });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_acyclic(&self, p: &Process) -> Result<(), ModelError> {
        // Kahn's algorithm over the local control-flow graph.
        let mut indeg: BTreeMap<u32, usize> = p.locations.iter().map(|l| (*l, 0)).collect();
        for id in &p.transitions {
            *indeg.get_mut(&self.transitions[id.0].dst).expect("location") += 1;
        }
        let mut ready: Vec<u32> = indeg.iter().filter(|(_, d)| **d == 0).map(|(l, _)| *l).collect();
        let mut seen = 0;
        while let Some(l) = ready.pop() {
            seen += 1;
            for id in &p.transitions {
                let t = &self.transitions[id.0];
                if t.src == l {
                    let d = indeg.get_mut(&t.dst).expect("location");
                    *d -= 1;
                    if *d == 0 {
                        ready.push(t.dst);
                    }
                }
            }
        }
        if seen == p.locations.len() {
            Ok(())
        } else {
            Err(ModelError::Cycle(p.name.clone()))
        }
    }

    pub fn decl(&self, v: &Var) -> Option<&VarDecl> {
        self.vars.iter().find(|d| &d.name == v)
    }

    pub fn transition(&self, id: TransId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn shared_vars(&self) -> impl Iterator<Item = &Var> {
        self.vars.iter().filter(|d| d.owner.is_none()).map(|d| &d.name)
    }

    pub fn resources(&self) -> impl Iterator<Item = (&Var, &LinTerm)> {
        self.annotations.iter().filter_map(|a| match a {
            Annotation::Resource { var, bound } => Some((var, bound)),
            Annotation::Flag(_) => None,
        })
    }

    pub fn flags(&self) -> impl Iterator<Item = &Var> {
        self.annotations.iter().filter_map(|a| match a {
            Annotation::Flag(v) => Some(v),
            Annotation::Resource { .. } => None,
        })
    }

    /// Conjunction of initial values and assumptions.
    pub fn initial_constraint(&self) -> Formula {
        let inits = self.vars.iter().filter_map(|d| match &d.init {
            Init::Value(c) => Some(Formula::atom(LinTerm::var(d.name.clone()), Rel::Eq, LinTerm::constant(c.clone()))),
            Init::Any => None,
        });
        Formula::conj(inits.chain(self.assumptions.iter().cloned().map(Formula::Atom)))
    }

    pub fn initial_loc(&self) -> GlobalLoc {
        GlobalLoc(self.processes.iter().map(|p| p.initial).collect())
    }

    pub fn initial_state(&self) -> SymState {
        SymState {
            loc: self.initial_loc(),
            pc: self.initial_constraint(),
            depth: 0,
        }
    }

    /// Transitions whose source is the current location of their process,
    /// in ascending id order.
    pub fn schedulable(&self, loc: &GlobalLoc) -> Vec<TransId> {
        self.transitions
            .iter()
            .filter(|t| loc.0[t.process] == t.src)
            .map(|t| t.id)
            .collect()
    }

    pub fn is_terminal(&self, loc: &GlobalLoc) -> bool {
        self.transitions.iter().all(|t| loc.0[t.process] != t.src)
    }

    pub fn is_enabled(&self, solver: &Solver, s: &SymState, t: TransId) -> Result<bool, SolverError> {
        let t = self.transition(t);
        if t.is_unguarded() {
            return Ok(solver.is_sat(&s.pc)?.is_sat());
        }
        let q = Formula::conj([s.pc.clone(), t.guard_formula()]);
        Ok(solver.is_sat(&q)?.is_sat())
    }

    /// The schedulable transitions whose guard is satisfiable in `s`.
    pub fn enabled(&self, solver: &Solver, s: &SymState) -> Result<Vec<TransId>, SolverError> {
        let mut out = Vec::new();
        for t in self.schedulable(&s.loc) {
            if self.is_enabled(solver, s, t)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Executing one transition cannot remove another from the schedulable
    /// set unless both leave the same location of the same process.
    pub fn can_deschedule(&self, t1: TransId, t2: TransId) -> bool {
        let (a, b) = (self.transition(t1), self.transition(t2));
        t1 != t2 && a.process == b.process && a.src == b.src
    }

    /// Symbolic successor. The caller guarantees `t` is schedulable at `s`;
    /// the result may be infeasible.
    pub fn execute(&self, s: &SymState, t: TransId) -> SymState {
        let t = self.transition(t);
        let mut loc = s.loc.clone();
        debug_assert_eq!(loc.0[t.process], t.src, "{} is not schedulable at {}", t.id, s.loc);
        loc.0[t.process] = t.dst;
        let depth = s.depth + 1;
        let pc = match &t.assign {
            None => Formula::conj([s.pc.clone(), t.guard_formula()]),
            Some((v, e)) => {
                let old = Var::new(format!("{v}#{depth}"));
                let old_term = LinTerm::var(old.clone());
                let before = Formula::conj([s.pc.clone(), t.guard_formula()]).substitute(v, &old_term);
                let def = Formula::atom(LinTerm::var(v.clone()), Rel::Eq, e.substitute(v, &old_term));
                eliminate(Formula::conj([before, def]), &old)
            }
        };
        SymState {
            loc,
            pc: pc.simplify(),
            depth,
        }
    }

    /// A model of `pc && !property`, if any.
    pub fn violates(&self, solver: &Solver, s: &SymState) -> Result<Option<Model>, SolverError> {
        if self.property.is_true() {
            return Ok(None);
        }
        let q = Formula::conj([s.pc.clone(), Formula::negation(self.property.clone())]);
        Ok(solver.is_sat(&q)?.model())
    }

    /// Path formula of `trace` over per-step versions `v@k`, with the
    /// version map reached at the end.
    pub fn path_formula(&self, trace: &[TransId]) -> (Formula, BTreeMap<Var, Var>) {
        let mut current: BTreeMap<Var, Var> = self.vars.iter().map(|d| (d.name.clone(), versioned(&d.name, 0))).collect();
        let mut parts = vec![rename_all(&self.initial_constraint(), &current)];
        for (k, id) in trace.iter().enumerate() {
            let t = self.transition(*id);
            parts.push(rename_all(&t.guard_formula(), &current));
            if let Some((v, e)) = &t.assign {
                let rhs = rename_term(e, &current);
                let fresh = versioned(v, k + 1);
                parts.push(Formula::atom(LinTerm::var(fresh.clone()), Rel::Eq, rhs));
                current.insert(v.clone(), fresh);
            }
        }
        (Formula::conj(parts), current)
    }

    /// Initial valuation under which `trace` is feasible and ends in a state
    /// violating the property.
    pub fn witness(&self, solver: &Solver, trace: &[TransId]) -> Result<Option<Model>, SolverError> {
        let (path, last) = self.path_formula(trace);
        let bad = rename_all(&Formula::negation(self.property.clone()), &last);
        let Some(m) = solver.is_sat(&Formula::conj([path, bad]))?.model() else {
            return Ok(None);
        };
        let zero = Int::zero();
        Ok(Some(
            self.vars
                .iter()
                .map(|d| (d.name.clone(), m.get(&versioned(&d.name, 0)).unwrap_or(&zero).clone()))
                .collect(),
        ))
    }

    /// Concrete initial valuation: declared values, with `witness`
    /// supplying the unconstrained ones. `None` when a value is missing,
    /// contradicts a declared initial value, or breaks an assumption.
    pub fn concrete_initial(&self, witness: &Model) -> Option<Model> {
        let mut m = Model::new();
        for d in &self.vars {
            let v = match (&d.init, witness.get(&d.name)) {
                (Init::Value(c), Some(w)) if w != c => return None,
                (Init::Value(c), _) => c.clone(),
                (Init::Any, Some(w)) => w.clone(),
                (Init::Any, None) => return None,
            };
            m.insert(d.name.clone(), v);
        }
        self.assumptions.iter().all(|a| a.eval(&m) == Some(true)).then_some(m)
    }

    /// Concrete successor, or `None` when the guard is false.
    pub fn step_concrete(&self, vals: &Model, t: TransId) -> Option<Model> {
        let t = self.transition(t);
        if !t.guard.iter().all(|a| a.eval(vals) == Some(true)) {
            return None;
        }
        let mut next = vals.clone();
        if let Some((v, e)) = &t.assign {
            next.insert(v.clone(), e.eval(vals).expect("all variables valued"));
        }
        Some(next)
    }

    /// Runs `trace` concretely from `witness`. `Ok(true)` iff every guard
    /// holds and the final state violates the property.
    pub fn replay(&self, trace: &[TransId], witness: &Model) -> Result<bool, ReplayError> {
        let Some(mut vals) = self.concrete_initial(witness) else {
            return Ok(false);
        };
        let mut loc = self.initial_loc();
        for (step, id) in trace.iter().enumerate() {
            let t = self.transitions.get(id.0).ok_or(ReplayError::UnknownTransition(*id))?;
            if loc.0[t.process] != t.src {
                return Err(ReplayError::NotSchedulable { step, id: *id });
            }
            match self.step_concrete(&vals, *id) {
                Some(next) => vals = next,
                None => return Ok(false),
            }
            loc.0[t.process] = t.dst;
        }
        Ok(self.property.eval(&vals) == Some(false))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("unknown transition {0}")]
    UnknownTransition(TransId),
    #[error("step {step}: {id} is not schedulable")]
    NotSchedulable { step: usize, id: TransId },
}

fn versioned(v: &Var, k: usize) -> Var {
    Var::new(format!("{v}@{k}"))
}

fn rename_term(t: &LinTerm, map: &BTreeMap<Var, Var>) -> LinTerm {
    LinTerm::from_parts(
        t.coeffs().map(|(v, c)| (map.get(v).cloned().unwrap_or_else(|| v.clone()), c.clone())),
        t.constant_part().clone(),
    )
}

fn rename_all(f: &Formula, map: &BTreeMap<Var, Var>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => Formula::Atom(Atom::new(rename_term(&a.lhs, map), a.rel, rename_term(&a.rhs, map))),
        Formula::Not(g) => Formula::Not(Box::new(rename_all(g, map))),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| rename_all(g, map)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| rename_all(g, map)).collect()),
        Formula::Implies(a, b) => Formula::Implies(Box::new(rename_all(a, map)), Box::new(rename_all(b, map))),
    }
}

/// Projects `old` out of `f` by substituting a top-level equality in which
/// it has coefficient +-1. Prefers the equality with the fewest other
/// variables; keeps `old` when no such equality exists.
fn eliminate(f: Formula, old: &Var) -> Formula {
    let conjuncts: Vec<Formula> = f.conjuncts().into_iter().cloned().collect();
    let mut best: Option<(usize, usize, LinTerm)> = None;
    for (i, c) in conjuncts.iter().enumerate() {
        let Formula::Atom(a) = c else { continue };
        let n = a.normalize();
        if n.kind != NormKind::Eq {
            continue;
        }
        let k = n.term.coeff(old);
        if !k.abs().is_one() {
            continue;
        }
        // k*old + rest = 0  =>  old = -rest / k
        let rest = n.term.minus(&LinTerm::scaled_var(k.clone(), old.clone()));
        let solved = if k.is_positive() { rest.negated() } else { rest };
        let others = solved.vars().count();
        if best.as_ref().is_none_or(|b| others < b.1) {
            best = Some((i, others, solved));
        }
    }
    let Some((i, _, solved)) = best else {
        return Formula::conj(conjuncts);
    };
    Formula::conj(
        conjuncts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| c.substitute(old, &solved)),
    )
}

impl SymState {
    pub fn is_feasible(&self, solver: &Solver) -> Result<bool, SolverError> {
        Ok(matches!(solver.is_sat(&self.pc)?, SatResult::Sat(_)))
    }
}
