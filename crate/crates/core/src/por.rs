//! Semi-commutativity facts and persistent sets per program point.
//!
//! A fact `<scope, cond, left ^ right>` states that at any state in scope
//! satisfying `cond`, a complete trace that runs `left` immediately before
//! `right` covers the trace with the two swapped: if the former is safe, so
//! is the latter. Facts come from two sources. Plain independence (disjoint
//! reads and writes) gives facts with condition `true`, restricted so that
//! the first transition cannot hide a violation the swapped order would
//! show. Annotated resource and flag variables give property-dependent
//! facts between transitions that conflict on those variables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::formula::{Formula, Int, LinTerm, NormKind, Rel, Solver, Var};
use crate::model::{GlobalLoc, Program, TransId};

/// Where a fact applies.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Scope {
    All,
    At(GlobalLoc),
}

impl Scope {
    pub fn contains(&self, loc: &GlobalLoc) -> bool {
        match self {
            Scope::All => true,
            Scope::At(l) => l == loc,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SemiCommuteFact {
    pub scope: Scope,
    pub cond: Formula,
    pub left: TransId,
    pub right: TransId,
}

impl fmt::Display for SemiCommuteFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scope = match &self.scope {
            Scope::All => "*".to_string(),
            Scope::At(l) => l.to_string(),
        };
        write!(f, "<{scope}, {}, {} ^ {}>", self.cond, self.left, self.right)
    }
}

/// Facts indexed by `(left, right)`.
#[derive(Clone, Default, Debug)]
pub struct FactSet {
    by_pair: HashMap<(TransId, TransId), Vec<SemiCommuteFact>>,
    len: usize,
}

impl FactSet {
    pub fn new(facts: impl IntoIterator<Item = SemiCommuteFact>) -> Self {
        let mut s = FactSet::default();
        for f in facts {
            s.insert(f);
        }
        s
    }

    pub fn insert(&mut self, f: SemiCommuteFact) {
        let entry = self.by_pair.entry((f.left, f.right)).or_default();
        if !entry.contains(&f) {
            entry.push(f);
            self.len += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &SemiCommuteFact> {
        self.by_pair.values().flatten()
    }

    /// The facts whose condition is `true`.
    pub fn unconditional(&self) -> FactSet {
        FactSet::new(self.iter().filter(|f| f.cond.is_true()).cloned())
    }

    /// Condition of an in-scope fact `left ^ right` at `loc`, preferring an
    /// unconditional one.
    pub fn lookup(&self, loc: &GlobalLoc, left: TransId, right: TransId) -> Option<&Formula> {
        let facts = self.by_pair.get(&(left, right))?;
        let mut in_scope = facts.iter().filter(|f| f.scope.contains(loc));
        let first = in_scope.clone().next()?;
        Some(in_scope.find(|f| f.cond.is_true()).map_or(&first.cond, |f| &f.cond))
    }
}

/// No write of either transition touches a variable the other reads or
/// writes.
pub fn independent(p: &Program, t1: TransId, t2: TransId) -> bool {
    let (a, b) = (p.transition(t1), p.transition(t2));
    let (ra, wa) = (a.reads(), a.writes());
    let (rb, wb) = (b.reads(), b.writes());
    wa.is_disjoint(&rb) && wa.is_disjoint(&wb) && wb.is_disjoint(&ra)
}

fn cross_pairs(p: &Program) -> impl Iterator<Item = (TransId, TransId)> + '_ {
    p.transitions.iter().flat_map(move |a| {
        p.transitions
            .iter()
            .filter(move |b| b.process != a.process)
            .map(move |b| (a.id, b.id))
    })
}

/// Facts from independence. `left ^ right` additionally requires that every
/// top-level conjunct of the property either ignores what `right` writes,
/// or ignores what `left` writes while `left` is unguarded; otherwise the
/// state after `right` alone could violate the property unseen by the
/// trace that runs `left` first.
pub fn independence_facts(p: &Program) -> Vec<SemiCommuteFact> {
    let conjuncts: Vec<BTreeSet<Var>> = p.property.conjuncts().iter().map(|c| c.free_vars()).collect();
    cross_pairs(p)
        .filter(|&(l, r)| independent(p, l, r))
        .filter(|&(l, r)| {
            let (tl, tr) = (p.transition(l), p.transition(r));
            let (wl, wr) = (tl.writes(), tr.writes());
            conjuncts
                .iter()
                .all(|c| c.is_disjoint(&wr) || (c.is_disjoint(&wl) && tl.is_unguarded()))
        })
        .map(|(left, right)| SemiCommuteFact {
            scope: Scope::All,
            cond: Formula::True,
            left,
            right,
        })
        .collect()
}

/// Shape of an unguarded update of a resource variable.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ResourceOp {
    Add,
    Mult,
    Sub,
}

/// Classifies `t` as `r := r + c`, `r := 2*r` or `r := r - c` with `c > 0`.
pub fn classify(p: &Program, t: TransId, r: &Var) -> Option<ResourceOp> {
    let t = p.transition(t);
    let (v, e) = t.assign.as_ref()?;
    if v != r || !t.is_unguarded() || e.vars().any(|u| u != r) {
        return None;
    }
    let k = e.coeff(r);
    let c = e.constant_part();
    if k.is_one() && c.is_positive() {
        Some(ResourceOp::Add)
    } else if k.is_one() && c.is_negative() {
        Some(ResourceOp::Sub)
    } else if k == Int::from(2) && c.is_zero() {
        Some(ResourceOp::Mult)
    } else {
        None
    }
}

/// Whether swapping resource updates is justified for `r`: every value that
/// depends on `r` is computed monotonically from it, no guard reads such a
/// value, and the property can only be falsified by making such values
/// larger. Under these conditions a trace whose resource values dominate
/// another's pointwise is the harder one to keep safe.
pub fn resource_is_monotone(p: &Program, r: &Var) -> bool {
    let mut dep: BTreeSet<Var> = BTreeSet::from([r.clone()]);
    loop {
        let before = dep.len();
        for t in &p.transitions {
            if let Some((v, e)) = &t.assign {
                if e.vars().any(|u| dep.contains(u)) {
                    dep.insert(v.clone());
                }
            }
        }
        if dep.len() == before {
            break;
        }
    }
    for t in &p.transitions {
        if t.guard.iter().any(|a| a.vars().any(|u| dep.contains(u))) {
            return false;
        }
        if let Some((_, e)) = &t.assign {
            if e.coeffs().any(|(u, c)| dep.contains(u) && c.is_negative()) {
                return false;
            }
        }
    }
    downward_closed(&p.property, &dep, true)
}

/// `f` (under polarity `positive`) stays true when variables in `dep`
/// decrease.
fn downward_closed(f: &Formula, dep: &BTreeSet<Var>, positive: bool) -> bool {
    match f {
        Formula::True | Formula::False => true,
        Formula::Atom(a) => {
            if !a.vars().any(|v| dep.contains(v)) {
                return true;
            }
            let a = if positive { a.clone() } else { a.negated() };
            let n = a.normalize();
            n.kind == NormKind::Le && n.term.coeffs().all(|(v, c)| !dep.contains(v) || c.is_positive())
        }
        Formula::Not(g) => downward_closed(g, dep, !positive),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|g| downward_closed(g, dep, positive)),
        Formula::Implies(a, b) => downward_closed(a, dep, !positive) && downward_closed(b, dep, positive),
    }
}

/// Facts from resource annotations: for cross-process updates of the same
/// resource, additions go before doublings and subtractions, and doublings
/// go before subtractions; updates of the same shape commute both ways.
pub fn resource_facts(p: &Program) -> Vec<SemiCommuteFact> {
    let mut out = Vec::new();
    for (r, _) in p.resources() {
        if !resource_is_monotone(p, r) {
            continue;
        }
        for (l, rt) in cross_pairs(p) {
            let (Some(a), Some(b)) = (classify(p, l, r), classify(p, rt, r)) else {
                continue;
            };
            use ResourceOp::*;
            let ok = matches!((a, b), (Add, Mult) | (Add, Sub) | (Mult, Sub)) || a == b;
            if ok {
                out.push(SemiCommuteFact {
                    scope: Scope::All,
                    cond: Formula::True,
                    left: l,
                    right: rt,
                });
            }
        }
    }
    out
}

/// Facts from flag annotations: once `f = 1` holds and `f = 1` alone
/// implies the property, every continuation is safe, so any order covers
/// any other. Emitted only when each write to `f` is `f := 1`.
pub fn flag_facts(p: &Program, solver: &Solver) -> Vec<SemiCommuteFact> {
    let mut out = Vec::new();
    for f in p.flags() {
        let one = LinTerm::constant(1);
        let sticky = p.transitions.iter().all(|t| match &t.assign {
            Some((v, e)) => v != f || e == &one,
            None => true,
        });
        let set = Formula::atom(LinTerm::var(f.clone()), Rel::Eq, one);
        if !sticky || !solver.entails(&set, &p.property).unwrap_or(false) {
            continue;
        }
        out.extend(cross_pairs(p).map(|(left, right)| SemiCommuteFact {
            scope: Scope::All,
            cond: set.clone(),
            left,
            right,
        }));
    }
    out
}

/// Independence facts plus those from resource and flag annotations.
pub fn pattern_facts(p: &Program, solver: &Solver) -> Vec<SemiCommuteFact> {
    let mut out = independence_facts(p);
    out.extend(resource_facts(p));
    out.extend(flag_facts(p, solver));
    out
}

/// Transitions that can still be taken from `loc`: those whose source is
/// reachable from the current location of their process.
pub fn schedulable_after(p: &Program, loc: &GlobalLoc) -> BTreeSet<TransId> {
    let mut out = BTreeSet::new();
    for proc in &p.processes {
        let mut reached = BTreeSet::from([loc.0[proc.index]]);
        let mut stack = vec![loc.0[proc.index]];
        while let Some(l) = stack.pop() {
            for id in &proc.transitions {
                let t = p.transition(*id);
                if t.src == l {
                    out.insert(t.id);
                    if reached.insert(t.dst) {
                        stack.push(t.dst);
                    }
                }
            }
        }
    }
    out
}

/// Transitions reachable from `loc` along local paths that do not take a
/// transition of `avoid`.
fn reachable_avoiding(p: &Program, loc: &GlobalLoc, avoid: &BTreeSet<TransId>) -> BTreeSet<TransId> {
    let mut out = BTreeSet::new();
    for proc in &p.processes {
        let mut reached = BTreeSet::from([loc.0[proc.index]]);
        let mut stack = vec![loc.0[proc.index]];
        while let Some(l) = stack.pop() {
            for id in &proc.transitions {
                let t = p.transition(*id);
                if t.src == l && !avoid.contains(id) {
                    out.insert(t.id);
                    if reached.insert(t.dst) {
                        stack.push(t.dst);
                    }
                }
            }
        }
    }
    out
}

/// Priority of processes when ordering transitions: lower rank first, then
/// lower transition id.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProcessOrder {
    rank: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid process order `{0}`: expected `default`, `reverse` or a comma-separated list of all process names")]
pub struct OrderError(pub String);

impl ProcessOrder {
    pub fn identity(n: usize) -> Self {
        ProcessOrder { rank: (0..n).collect() }
    }

    pub fn reversed(n: usize) -> Self {
        ProcessOrder {
            rank: (0..n).rev().collect(),
        }
    }

    /// `default`, `reverse`, or a permutation of process names or indices
    /// such as `P2,P1`.
    pub fn parse(spec: &str, p: &Program) -> Result<Self, OrderError> {
        let n = p.processes.len();
        match spec.trim() {
            "" | "default" => return Ok(Self::identity(n)),
            "reverse" => return Ok(Self::reversed(n)),
            _ => {}
        }
        let mut rank = vec![usize::MAX; n];
        let items: Vec<&str> = spec.split(',').map(str::trim).collect();
        if items.len() != n {
            return Err(OrderError(spec.into()));
        }
        for (pos, item) in items.iter().enumerate() {
            let idx = p
                .processes
                .iter()
                .position(|q| q.name == *item)
                .or_else(|| usize::from_str(item).ok().filter(|i| *i < n))
                .ok_or_else(|| OrderError(spec.into()))?;
            if rank[idx] != usize::MAX {
                return Err(OrderError(spec.into()));
            }
            rank[idx] = pos;
        }
        Ok(ProcessOrder { rank })
    }

    pub fn key(&self, p: &Program, t: TransId) -> (usize, TransId) {
        (self.rank[p.transition(t).process], t)
    }

    pub fn sort(&self, p: &Program, ts: &mut [TransId]) {
        ts.sort_by_key(|t| self.key(p, *t));
    }
}

/// A persistent set of a program point with the condition under which it
/// is valid.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PersistentSetEntry {
    pub loc: GlobalLoc,
    /// Members in exploration order.
    pub set: Vec<TransId>,
    pub psi_trace: Formula,
}

/// Candidate persistent sets at `loc`, best first: for every schedulable
/// seed, its closure under all facts and under the unconditional facts
/// alone, ordered by size and then by seed priority. The last candidate
/// with a `true` condition is never larger than necessary for its seed, so
/// a caller can always find an applicable one.
pub fn persistent_set_candidates(
    p: &Program,
    loc: &GlobalLoc,
    facts: &FactSet,
    unconditional: &FactSet,
    order: &ProcessOrder,
) -> Vec<PersistentSetEntry> {
    let mut schedulable = p.schedulable(loc);
    order.sort(p, &mut schedulable);
    let mut out: Vec<PersistentSetEntry> = Vec::new();
    for &seed in &schedulable {
        for fs in [facts, unconditional] {
            let e = persistent_set_from_seed(p, loc, fs, order, seed);
            if !out.contains(&e) {
                out.push(e);
            }
        }
    }
    // Stable: ties keep seed priority, and for one seed the conditional
    // closure comes first.
    out.sort_by_key(|e| e.set.len());
    out
}

/// The smallest persistent set at `loc` regardless of its condition, ties
/// going to the earlier seed in `order`.
pub fn persistent_set_at_loc(
    p: &Program,
    loc: &GlobalLoc,
    facts: &FactSet,
    order: &ProcessOrder,
) -> PersistentSetEntry {
    let mut schedulable = p.schedulable(loc);
    order.sort(p, &mut schedulable);
    let mut best: Option<PersistentSetEntry> = None;
    for &seed in &schedulable {
        let e = persistent_set_from_seed(p, loc, facts, order, seed);
        if best.as_ref().is_none_or(|b| e.set.len() < b.set.len()) {
            best = Some(e);
        }
    }
    best.unwrap_or_else(|| PersistentSetEntry {
        loc: loc.clone(),
        set: Vec::new(),
        psi_trace: Formula::True,
    })
}

/// Closure of `{seed}` at `loc`: every transition that some member cannot
/// be shown to precede is added. Transitions that are not yet schedulable
/// bring in all schedulable transitions of their process instead. The
/// returned condition conjoins the facts relied upon.
pub fn persistent_set_from_seed(
    p: &Program,
    loc: &GlobalLoc,
    facts: &FactSet,
    order: &ProcessOrder,
    seed: TransId,
) -> PersistentSetEntry {
    let mut schedulable = p.schedulable(loc);
    order.sort(p, &mut schedulable);
    debug_assert!(schedulable.contains(&seed), "{seed} is not schedulable at {loc}");
    let mut set = BTreeSet::from([seed]);
    loop {
        let mut candidates: Vec<TransId> = reachable_avoiding(p, loc, &set).into_iter().collect();
        order.sort(p, &mut candidates);
        let missing = candidates
            .iter()
            .find(|&&ti| set.iter().any(|&tp| facts.lookup(loc, tp, ti).is_none()));
        let Some(&ti) = missing else { break };
        let t = p.transition(ti);
        if loc.0[t.process] == t.src {
            set.insert(ti);
        } else {
            set.extend(schedulable.iter().filter(|s| p.transition(**s).process == t.process));
        }
    }
    let psi_trace = if set.len() == schedulable.len() {
        Formula::True
    } else {
        let candidates = reachable_avoiding(p, loc, &set);
        let mut conds: Vec<Formula> = Vec::new();
        for &tp in &set {
            for &ti in &candidates {
                let c = facts.lookup(loc, tp, ti).expect("closed under facts");
                if !c.is_true() && !conds.contains(c) {
                    conds.push(c.clone());
                }
            }
        }
        Formula::conj(conds)
    };
    let mut members: Vec<TransId> = set.into_iter().collect();
    order.sort(p, &mut members);
    PersistentSetEntry {
        loc: loc.clone(),
        set: members,
        psi_trace,
    }
}

/// Lazily computed persistent set candidates, one list per visited
/// program point.
#[derive(Debug)]
pub struct PersistentSets {
    facts: FactSet,
    unconditional: FactSet,
    order: ProcessOrder,
    cache: BTreeMap<GlobalLoc, Vec<PersistentSetEntry>>,
}

impl PersistentSets {
    pub fn new(facts: FactSet, order: ProcessOrder) -> Self {
        PersistentSets {
            unconditional: facts.unconditional(),
            facts,
            order,
            cache: BTreeMap::new(),
        }
    }

    pub fn facts(&self) -> &FactSet {
        &self.facts
    }

    /// Candidates at `loc`, best first (see [`persistent_set_candidates`]).
    pub fn get(&mut self, p: &Program, loc: &GlobalLoc) -> &[PersistentSetEntry] {
        if !self.cache.contains_key(loc) {
            let e = persistent_set_candidates(p, loc, &self.facts, &self.unconditional, &self.order);
            self.cache.insert(loc.clone(), e);
        }
        &self.cache[loc]
    }

    /// Every candidate computed so far, ordered by location.
    pub fn entries(&self) -> impl Iterator<Item = &PersistentSetEntry> {
        self.cache.values().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{closely_coupled, loosely_coupled, parse, sum_of_ids};

    fn ids(v: &[usize]) -> Vec<TransId> {
        v.iter().map(|i| TransId(*i)).collect()
    }

    #[test]
    fn independence_examples() {
        let p = parse(
            "shared x = 0\nshared y = 0\nprocess A {\n 0 -> 1 : x := x + 1;\n}\nprocess B {\n 0 -> 1 : y := y + 1;\n 1 -> 2 : x := 2*x;\n 2 -> 3 : [x = 0] skip;\n}\n",
        )
        .unwrap();
        assert!(independent(&p, TransId(0), TransId(1)));
        assert!(!independent(&p, TransId(0), TransId(2)));
        assert!(!independent(&p, TransId(0), TransId(3)));
    }

    #[test]
    fn coupled_root_with_and_without_resource_facts() {
        let solver = Solver::default();
        let order = ProcessOrder::identity(2);
        let root = GlobalLoc(vec![0, 0]);
        let plain = closely_coupled(false);
        let e = persistent_set_at_loc(&plain, &root, &FactSet::new(independence_facts(&plain)), &order);
        assert_eq!(e.set, ids(&[0, 2]));
        assert!(e.psi_trace.is_true());

        let annotated = closely_coupled(true);
        let facts = FactSet::new(pattern_facts(&annotated, &solver));
        assert!(facts.lookup(&root, TransId(0), TransId(2)).is_some_and(Formula::is_true));
        assert!(facts.lookup(&root, TransId(2), TransId(0)).is_none());
        let e = persistent_set_at_loc(&annotated, &root, &facts, &order);
        assert_eq!(e.set, ids(&[0]));
        assert!(e.psi_trace.is_true());
    }

    #[test]
    fn sum_of_ids_root_is_singleton() {
        let p = sum_of_ids(6).unwrap();
        let facts = FactSet::new(pattern_facts(&p, &Solver::default()));
        let e = persistent_set_at_loc(&p, &p.initial_loc(), &facts, &ProcessOrder::identity(6));
        assert_eq!(e.set, ids(&[0]));
    }

    #[test]
    fn loosely_coupled_is_independent() {
        let p = loosely_coupled();
        let facts = FactSet::new(independence_facts(&p));
        let e = persistent_set_at_loc(&p, &p.initial_loc(), &facts, &ProcessOrder::identity(2));
        assert_eq!(e.set, ids(&[0]));
    }

    #[test]
    fn schedulable_after_examples() {
        let p = closely_coupled(false);
        assert_eq!(schedulable_after(&p, &GlobalLoc(vec![0, 0])).len(), 4);
        assert!(schedulable_after(&p, &GlobalLoc(vec![2, 2])).is_empty());
        assert_eq!(schedulable_after(&p, &GlobalLoc(vec![2, 0])), ids(&[2, 3]).into_iter().collect());
    }

    #[test]
    fn guarded_or_non_monotone_resources_give_no_facts() {
        let p = parse("shared r = 0\nresource r <= 4\nproperty always r <= 4\nprocess A {\n 0 -> 1 : r := r + 1;\n}\nprocess B {\n 0 -> 1 : r := 2*r;\n}\n").unwrap();
        assert_eq!(resource_facts(&p).len(), 1);
        let q = parse("shared r = 0\nshared s = 0\nresource r <= 4\nproperty always r <= 4 && s <= 0\nprocess A {\n 0 -> 1 : r := r + 1;\n}\nprocess B {\n 0 -> 1 : r := 2*r;\n}\nprocess C {\n 0 -> 1 : s := -r;\n}\n").unwrap();
        assert!(!resource_is_monotone(&q, &Var::new("r")));
        assert!(resource_facts(&q).is_empty());
    }

    #[test]
    fn flag_facts_need_sticky_flag_implying_property() {
        let solver = Solver::default();
        let good = parse("shared f = 0\nshared x = 0\nflag f\nproperty always f = 1 || x <= 1\nprocess A {\n 0 -> 1 : f := 1;\n}\nprocess B {\n 0 -> 1 : x := x + 1;\n}\n").unwrap();
        let facts = flag_facts(&good, &solver);
        assert_eq!(facts.len(), 2);
        assert_eq!(facts[0].cond, Formula::parse("f = 1").unwrap());
        let bad = parse("shared f = 0\nshared x = 0\nflag f\nproperty always x <= 1\nprocess A {\n 0 -> 1 : f := 1;\n}\nprocess B {\n 0 -> 1 : x := x + 1;\n}\n").unwrap();
        assert!(flag_facts(&bad, &solver).is_empty());
    }

    #[test]
    fn process_orders() {
        let p = closely_coupled(false);
        assert_eq!(ProcessOrder::parse("P2,P1", &p).unwrap(), ProcessOrder::reversed(2));
        assert_eq!(ProcessOrder::parse("default", &p).unwrap(), ProcessOrder::identity(2));
        assert!(ProcessOrder::parse("P1", &p).is_err());
        assert!(ProcessOrder::parse("P1,P1", &p).is_err());
        let e = persistent_set_at_loc(&p, &p.initial_loc(), &FactSet::default(), &ProcessOrder::reversed(2));
        assert_eq!(e.set, ids(&[2, 0]));
    }
}
