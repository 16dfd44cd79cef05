//! Symbolic execution against path formulas and concrete runs.

use proptest::prelude::*;

use synpor::formula::Solver;
use synpor::frontend::{parse, random_program, render, RandomConfig};
use synpor::model::{Program, TransId};
use synpor::oracle::{initial_valuations, Bounds};

/// A maximal schedulable sequence picking the `choices[k]`-th option at
/// step `k`.
fn trace(p: &Program, choices: &[usize]) -> Vec<TransId> {
    let mut loc = p.initial_loc();
    let mut out = Vec::new();
    for c in choices.iter().cycle().take(64) {
        let options = p.schedulable(&loc);
        if options.is_empty() {
            break;
        }
        let t = options[c % options.len()];
        let tr = p.transition(t);
        loc.0[tr.process] = tr.dst;
        out.push(t);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn execute_agrees_with_path_formula(seed in 0u64..1_000_000, choices in prop::collection::vec(0usize..4, 1..8)) {
        let p = random_program(seed, RandomConfig::default());
        let solver = Solver::default();
        let tr = trace(&p, &choices);
        let mut s = p.initial_state();
        for (k, t) in tr.iter().enumerate() {
            s = p.execute(&s, *t);
            let (path, _) = p.path_formula(&tr[..=k]);
            prop_assert_eq!(
                solver.is_sat(&s.pc).unwrap().is_sat(),
                solver.is_sat(&path).unwrap().is_sat(),
                "after {:?}", &tr[..=k]
            );
        }
    }

    #[test]
    fn execute_agrees_with_concrete_runs(seed in 0u64..1_000_000, choices in prop::collection::vec(0usize..4, 1..8)) {
        let p = random_program(seed, RandomConfig::default());
        let solver = Solver::default();
        let tr = trace(&p, &choices);
        let mut vals = initial_valuations(&p, Bounds::default()).unwrap();
        let mut s = p.initial_state();
        for t in &tr {
            s = p.execute(&s, *t);
            vals = vals.iter().filter_map(|m| p.step_concrete(m, *t)).collect();
            prop_assert_eq!(solver.is_sat(&s.pc).unwrap().is_sat(), !vals.is_empty());
        }
    }

    #[test]
    fn witnesses_replay(seed in 0u64..1_000_000, choices in prop::collection::vec(0usize..4, 1..8)) {
        let p = random_program(seed, RandomConfig::default());
        let tr = trace(&p, &choices);
        if let Some(w) = p.witness(&Solver::default(), &tr).unwrap() {
            prop_assert_eq!(p.replay(&tr, &w), Ok(true));
        }
    }

    #[test]
    fn rendering_round_trips(seed in 0u64..1_000_000) {
        let p = random_program(seed, RandomConfig::default());
        let text = render(&p);
        prop_assert_eq!(render(&parse(&text).unwrap()), text);
    }
}
