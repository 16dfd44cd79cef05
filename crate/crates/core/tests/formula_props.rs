//! Property tests for the linear integer arithmetic layer, checked against
//! brute-force enumeration over explicit boxes.

use proptest::prelude::*;
use synpor::formula::{entails, is_sat, Atom, Formula, LinTerm, Model, Rel, Var};

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![
        Just(Rel::Eq),
        Just(Rel::Ne),
        Just(Rel::Le),
        Just(Rel::Lt),
        Just(Rel::Ge),
        Just(Rel::Gt)
    ]
}

fn term(nvars: usize) -> impl Strategy<Value = LinTerm> {
    (prop::collection::vec((0..nvars, -3i64..=3), 0..3), -8i64..=8)
        .prop_map(|(parts, c)| LinTerm::from_parts(parts.into_iter().map(|(i, k)| (NAMES[i], k)), c))
}

fn atom(nvars: usize) -> impl Strategy<Value = Atom> {
    (term(nvars), rel(), term(nvars)).prop_map(|(l, r, h)| Atom::new(l, r, h))
}

fn formula(nvars: usize) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        8 => atom(nvars).prop_map(Formula::Atom),
        1 => Just(Formula::True),
        1 => Just(Formula::False),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
        ]
    })
}

fn boxed(f: &Formula, bounds: &[i64]) -> Formula {
    let mut parts = vec![f.clone()];
    for (i, b) in bounds.iter().enumerate() {
        let v = LinTerm::var(NAMES[i]);
        parts.push(Formula::atom(v.clone(), Rel::Le, LinTerm::constant(*b)));
        parts.push(Formula::atom(v, Rel::Ge, LinTerm::constant(-*b)));
    }
    Formula::And(parts)
}

/// All models of `f` with each variable `i` ranging over `[-bounds[i], bounds[i]]`.
fn models(f: &Formula, bounds: &[i64]) -> Vec<Model> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; bounds.len()];
    fn rec(f: &Formula, bounds: &[i64], i: usize, cur: &mut Vec<i64>, out: &mut Vec<Model>) {
        if i == bounds.len() {
            let m: Model = cur.iter().enumerate().map(|(j, x)| (NAMES[j], *x)).collect();
            if f.eval(&m) == Some(true) {
                out.push(m);
            }
            return;
        }
        for x in -bounds[i]..=bounds[i] {
            cur[i] = x;
            rec(f, bounds, i + 1, cur, out);
        }
    }
    rec(f, bounds, 0, &mut cur, &mut out);
    out
}

fn instance() -> impl Strategy<Value = (Formula, Vec<i64>)> {
    (1usize..=4).prop_flat_map(|n| {
        let max = if n == 4 { 5 } else { 10 };
        (formula(n), prop::collection::vec(0i64..=max, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn is_sat_agrees_with_enumeration((f, bounds) in instance()) {
        let g = boxed(&f, &bounds);
        let brute = !models(&g, &bounds).is_empty();
        match is_sat(&g).unwrap().model() {
            Some(m) => {
                prop_assert!(brute, "solver found {m} but the box has no model");
                prop_assert_eq!(g.eval(&m), Some(true));
            }
            None => prop_assert!(!brute, "solver says unsat but the box has a model"),
        }
    }

    #[test]
    fn entailment_is_sound_on_models((f, bounds) in instance(), g in formula(2)) {
        let f = boxed(&f, &bounds);
        if entails(&f, &g).unwrap() {
            let mut padded = bounds.clone();
            padded.resize(2.max(bounds.len()), 0);
            for m in models(&boxed(&f, &padded), &padded) {
                prop_assert_eq!(g.eval(&m), Some(true), "{} under {}", g, m);
            }
        }
    }

    #[test]
    fn simplify_preserves_meaning(f in formula(3)) {
        let s = f.simplify();
        prop_assert!(entails(&f, &s).unwrap());
        prop_assert!(entails(&s, &f).unwrap());
    }

    #[test]
    fn text_round_trips(f in formula(4)) {
        let text = f.to_string();
        prop_assert_eq!(Formula::parse(&text).unwrap(), f, "{}", text);
    }

    #[test]
    fn normalization_is_idempotent(a in atom(3)) {
        let n = a.normalize();
        prop_assert_eq!(n.to_atom().normalize(), n);
    }

    #[test]
    fn substitution_commutes_with_evaluation(f in formula(2), k in -3i64..=3, c in -4i64..=4, x in -5i64..=5, y in -5i64..=5) {
        let e = LinTerm::from_parts([("a", k), ("b", 1)], c);
        let m: Model = [("a", x), ("b", y)].into_iter().collect();
        let mut shifted = m.clone();
        shifted.insert(Var::new("a"), e.eval(&m).unwrap());
        prop_assert_eq!(f.substitute(&Var::new("a"), &e).eval(&m), f.eval(&shifted));
    }
}
