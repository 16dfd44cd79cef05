//! The search engine.

use std::time::Instant;

use crate::formula::{Formula, SolverError};
use crate::model::{Program, SymState, TransId};
use crate::por::{independence_facts, pattern_facts, FactSet, PersistentSetEntry, PersistentSets, ProcessOrder};

use super::{Config, Counterexample, ExplorationReport, MemoTable, Mode, Verdict};

/// A finished run: the report plus the internal tables, kept for
/// inspection (after an unsafe run the memo table is partial).
#[derive(Debug)]
pub struct Exploration {
    pub report: ExplorationReport,
    pub memo: MemoTable,
    pub persistent: Vec<PersistentSetEntry>,
}

struct Frame {
    state: SymState,
    via: Option<TransId>,
    enabled: Vec<TransId>,
    next: usize,
    psi: Formula,
}

enum Stop {
    Violation(Vec<TransId>),
    Limit,
}

impl From<SolverError> for Stop {
    fn from(_: SolverError) -> Self {
        Stop::Limit
    }
}

struct Engine<'a> {
    p: &'a Program,
    cfg: &'a Config,
    order: ProcessOrder,
    sets: Option<PersistentSets>,
    memo: MemoTable,
    visited: u64,
    subsumed: u64,
    traces: u64,
    deadline: Option<Instant>,
}

/// Runs the search selected by `cfg.mode`.
pub fn explore(p: &Program, cfg: &Config) -> Exploration {
    let start = Instant::now();
    let order = cfg
        .order
        .clone()
        .unwrap_or_else(|| ProcessOrder::identity(p.processes.len()));
    let sets = match cfg.mode {
        Mode::Exhaustive | Mode::Si => None,
        Mode::Por | Mode::PorSi => Some(PersistentSets::new(FactSet::new(independence_facts(p)), order.clone())),
        Mode::PdporSi => Some(PersistentSets::new(
            FactSet::new(pattern_facts(p, &cfg.solver)),
            order.clone(),
        )),
    };
    let mut e = Engine {
        p,
        cfg,
        order,
        sets,
        memo: MemoTable::new(),
        visited: 0,
        subsumed: 0,
        traces: 0,
        deadline: cfg.timeout.map(|d| start + d),
    };
    let outcome = e.run();
    let (verdict, counterexample) = match outcome {
        Ok(()) => (Verdict::Safe, None),
        Err(Stop::Limit) => (Verdict::ResourceLimit, None),
        Err(Stop::Violation(trace)) => match p.witness(&cfg.solver, &trace) {
            Ok(Some(witness)) => (Verdict::Unsafe, Some(Counterexample { trace, witness })),
            Ok(None) => unreachable!("violating state without a witness along {trace:?}"),
            Err(_) => (Verdict::ResourceLimit, None),
        },
    };
    let report = ExplorationReport {
        verdict,
        states_visited: e.visited,
        states_subsumed: e.subsumed,
        traces_completed: e.traces,
        time_ms: start.elapsed().as_millis() as u64,
        counterexample,
    };
    Exploration {
        report,
        memo: e.memo,
        persistent: e.sets.map(|s| s.entries().cloned().collect()).unwrap_or_default(),
    }
}

impl Engine<'_> {
    fn interpolating(&self) -> bool {
        self.cfg.mode.uses_interpolants()
    }

    /// Transitions to expand at `s`, and the condition the interpolant must
    /// carry when a persistent set is used: the first candidate whose
    /// condition the state entails.
    fn expansion(&mut self, s: &SymState) -> Result<(Vec<TransId>, Formula), Stop> {
        let mut all = self.p.schedulable(&s.loc);
        self.order.sort(self.p, &mut all);
        let Some(sets) = self.sets.as_mut() else {
            return Ok((all, Formula::True));
        };
        for entry in sets.get(self.p, &s.loc) {
            if entry.psi_trace.is_true() {
                return Ok((entry.set.clone(), Formula::True));
            }
            if self.cfg.mode != Mode::Por && self.cfg.solver.entails(&s.pc, &entry.psi_trace)? {
                return Ok((entry.set.clone(), entry.psi_trace.clone()));
            }
        }
        Ok((all, Formula::True))
    }

    fn check_deadline(&self) -> Result<(), Stop> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Stop::Limit),
            _ => Ok(()),
        }
    }

    fn run(&mut self) -> Result<(), Stop> {
        let solver = self.cfg.solver;
        let mut trace: Vec<TransId> = Vec::new();
        let mut stack: Vec<Frame> = Vec::new();
        let mut pending: Option<(SymState, Option<TransId>)> = Some((self.p.initial_state(), None));
        let mut returned: Option<Formula> = None;
        loop {
            self.check_deadline()?;
            if let Some((s, via)) = pending.take() {
                if let Some(t) = via {
                    trace.push(t);
                }
                if self.interpolating() {
                    if let Some(f) = self.memo.memoed(&solver, &s)? {
                        self.subsumed += 1;
                        returned = Some(f.clone());
                        if via.is_some() {
                            trace.pop();
                        }
                        continue;
                    }
                }
                self.visited += 1;
                if self.p.violates(&solver, &s)?.is_some() {
                    return Err(Stop::Violation(trace));
                }
                let (ts, cond) = self.expansion(&s)?;
                let mut psi = Formula::conj([self.p.property.clone(), cond]);
                let mut enabled = Vec::with_capacity(ts.len());
                for t in ts {
                    if self.p.is_enabled(&solver, &s, t)? {
                        enabled.push(t);
                    } else if self.interpolating() {
                        psi = Formula::conj([psi, self.p.transition(t).pre(&Formula::False)]);
                    }
                }
                stack.push(Frame {
                    state: s,
                    via,
                    enabled,
                    next: 0,
                    psi,
                });
                continue;
            }
            let Some(top) = stack.last_mut() else {
                return Ok(());
            };
            if let Some(child) = returned.take() {
                let t = top.enabled[top.next - 1];
                top.psi = Formula::conj([std::mem::replace(&mut top.psi, Formula::True), self.p.transition(t).pre(&child)]);
            }
            if top.next < top.enabled.len() {
                let t = top.enabled[top.next];
                top.next += 1;
                pending = Some((self.p.execute(&top.state, t), Some(t)));
                continue;
            }
            let frame = stack.pop().expect("nonempty");
            if frame.enabled.is_empty() {
                self.traces += 1;
            }
            if self.interpolating() {
                let psi = frame.psi.simplify();
                if self.cfg.check_self_subsumption {
                    assert!(
                        solver.entails(&frame.state.pc, &psi)?,
                        "interpolant {psi} does not hold in the state {} at {}",
                        frame.state.pc,
                        frame.state.loc
                    );
                }
                self.memo.insert(frame.state.loc.clone(), psi.clone());
                returned = Some(psi);
            }
            if frame.via.is_some() {
                trace.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{closely_coupled, loosely_coupled, parse, sum_of_ids};
    use crate::model::GlobalLoc;

    fn run(p: &Program, mode: Mode) -> Exploration {
        explore(p, &Config::new(mode))
    }

    #[test]
    fn coupled_counts() {
        let p = closely_coupled(false);
        for mode in [Mode::Exhaustive, Mode::Por] {
            let r = run(&p, mode).report;
            assert_eq!((r.verdict, r.states_visited, r.traces_completed), (Verdict::Safe, 19, 6), "{mode}");
        }
        let si = run(&p, Mode::Si);
        assert_eq!((si.report.states_visited, si.report.states_subsumed), (9, 4));
        let memo_at = |l: Vec<u32>| si.memo.get(&GlobalLoc(l)).to_vec();
        assert_eq!(memo_at(vec![2, 1]), vec![Formula::parse("x <= 4").unwrap()]);
        assert_eq!(memo_at(vec![1, 2]), vec![Formula::parse("x <= 7").unwrap()]);
        assert_eq!(memo_at(vec![1, 1]), vec![Formula::parse("x <= 3").unwrap()]);

        let pd = run(&closely_coupled(true), Mode::PdporSi).report;
        assert_eq!((pd.verdict, pd.states_visited, pd.traces_completed), (Verdict::Safe, 5, 1));
    }

    #[test]
    fn sum_of_ids_counts() {
        let p = sum_of_ids(3).unwrap();
        let ex = run(&p, Mode::Exhaustive).report;
        assert_eq!((ex.states_visited, ex.traces_completed), (16, 6));
        assert_eq!(run(&p, Mode::Por).report.states_visited, 16);
        assert_eq!(run(&sum_of_ids(6).unwrap(), Mode::PdporSi).report.states_visited, 7);
    }

    #[test]
    fn loosely_coupled_needs_one_trace() {
        let r = run(&loosely_coupled(), Mode::Por).report;
        assert_eq!((r.states_visited, r.traces_completed), (5, 1));
    }

    #[test]
    fn chain_and_counterexample() {
        let p = parse("shared x = 0\nproperty always x <= 1\nprocess P {\n 0 -> 1 : x := x + 1;\n 1 -> 2 : x := x + 1;\n}\n").unwrap();
        for mode in Mode::ALL {
            let r = run(&p, mode).report;
            assert_eq!(r.verdict, Verdict::Unsafe, "{mode}");
            let cex = r.counterexample.unwrap();
            assert_eq!(cex.trace, vec![TransId(0), TransId(1)]);
            assert!(p.replay(&cex.trace, &cex.witness).unwrap());
        }
        let mut safe = p.clone();
        safe.property = Formula::True;
        let r = run(&safe, Mode::Exhaustive).report;
        assert_eq!((r.states_visited, r.traces_completed), (3, 1));
    }

    #[test]
    fn budget_and_timeout_give_resource_limit() {
        let p = closely_coupled(false);
        let mut cfg = Config::new(Mode::Si);
        cfg.solver = crate::formula::Solver::with_budget(1);
        assert_eq!(explore(&p, &cfg).report.verdict, Verdict::ResourceLimit);
        let mut cfg = Config::new(Mode::Exhaustive);
        cfg.timeout = Some(std::time::Duration::ZERO);
        assert_eq!(explore(&p, &cfg).report.verdict, Verdict::ResourceLimit);
    }

    #[test]
    fn report_json_shape() {
        let r = run(&closely_coupled(false), Mode::Si).report;
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "SAFE");
        assert_eq!(v["states_visited"], 9);
        assert!(v.get("counterexample").is_none());
    }
}
