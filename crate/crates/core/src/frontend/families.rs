//! Parameterized benchmark programs.

use std::fmt;
use std::str::FromStr;

use crate::formula::{Atom, Formula, Int, LinTerm, Rel, Var};
use crate::model::{Annotation, Init, Program, ProgramBuilder};

use super::FrontendError;

fn var(name: &str) -> LinTerm {
    LinTerm::var(name)
}

fn le(lhs: LinTerm, rhs: LinTerm) -> Atom {
    Atom::new(lhs, Rel::Le, rhs)
}

fn eq(lhs: LinTerm, rhs: LinTerm) -> Atom {
    Atom::new(lhs, Rel::Eq, rhs)
}

fn set(v: &str, e: LinTerm) -> Option<(Var, LinTerm)> {
    Some((Var::new(v), e))
}

fn plus(v: &str, c: i64) -> LinTerm {
    var(v).plus_constant(&Int::from(c))
}

fn double(v: &str) -> LinTerm {
    LinTerm::scaled_var(2, v)
}

fn build(b: &ProgramBuilder) -> Result<Program, FrontendError> {
    Ok(b.build()?)
}

/// `2n` producers and one consumer. Producer `i` first bumps its own
/// counter, then adds one to `x` (the first `n`) or doubles `x` (the rest).
/// The consumer copies `x` into `cons.c`; the property bounds `cons.c` by
/// `n * 2^n`, the largest value `x` can reach.
pub fn producer_consumer(n: usize) -> Result<Program, FrontendError> {
    pc(n, 0)
}

fn pc(n: usize, slack: i64) -> Result<Program, FrontendError> {
    if n < 1 {
        return Err(FrontendError::Generator("producer/consumer needs n >= 1".into()));
    }
    let bound = (Int::from(n) << n) - slack;
    let mut b = ProgramBuilder::new();
    b.shared("x", Init::Value(0.into()));
    for i in 1..=2 * n {
        b.local(&format!("prod{i}"), "l", Init::Value(0.into()));
    }
    b.local("cons", "c", Init::Value(0.into()));
    b.annotate(Annotation::Resource {
        var: "x".into(),
        bound: LinTerm::constant(bound.clone()),
    });
    b.property(Formula::Atom(le(var("cons.c"), LinTerm::constant(bound))));
    for i in 1..=2 * n {
        let name = format!("prod{i}");
        let local = format!("{name}.l");
        let p = b.process(&name);
        b.transition(p, 0, 1, vec![], set(&local, plus(&local, 1)));
        let e = if i <= n { plus("x", 1) } else { double("x") };
        b.transition(p, 1, 2, vec![], set("x", e));
    }
    let c = b.process("cons");
    b.transition(c, 0, 1, vec![], set("cons.c", var("x")));
    build(&b)
}

/// `n` philosophers around `n` forks whose initial states are unknown
/// (each 0 or 1). A philosopher takes the left fork, then the right one,
/// eats, stops eating and puts both forks down. Each philosopher dines
/// at most once. The property says at most `n / 2` eat at a time.
pub fn dining_philosophers(n: usize) -> Result<Program, FrontendError> {
    phil(n, 0)
}

fn phil(n: usize, slack: i64) -> Result<Program, FrontendError> {
    if n < 2 {
        return Err(FrontendError::Generator("dining philosophers needs n >= 2".into()));
    }
    let fork = |i: usize| format!("f{}", i % n);
    let mut b = ProgramBuilder::new();
    for i in 0..n {
        b.shared(fork(i).as_str(), Init::Any);
    }
    b.shared("eat", Init::Value(0.into()));
    for i in 0..n {
        b.assume(le(LinTerm::zero(), var(&fork(i))));
        b.assume(le(var(&fork(i)), LinTerm::constant(1)));
    }
    let bound = Int::from(n / 2) - slack;
    b.property(Formula::Atom(le(var("eat"), LinTerm::constant(bound))));
    for i in 0..n {
        let (left, right) = (fork(i), fork(i + 1));
        let p = b.process(&format!("phil{i}"));
        b.transition(p, 0, 1, vec![eq(var(&left), LinTerm::zero())], set(&left, LinTerm::constant(1)));
        b.transition(p, 1, 2, vec![eq(var(&right), LinTerm::zero())], set(&right, LinTerm::constant(1)));
        b.transition(p, 2, 3, vec![], set("eat", plus("eat", 1)));
        b.transition(p, 3, 4, vec![], set("eat", plus("eat", -1)));
        b.transition(p, 4, 5, vec![], set(&left, LinTerm::zero()));
        b.transition(p, 5, 6, vec![], set(&right, LinTerm::zero()));
    }
    build(&b)
}

/// Process `i` adds `i` to `sum`; the property bounds `sum` by
/// `n(n+1)/2`.
pub fn sum_of_ids(n: usize) -> Result<Program, FrontendError> {
    sum(n, 0)
}

fn sum(n: usize, slack: i64) -> Result<Program, FrontendError> {
    if n < 1 {
        return Err(FrontendError::Generator("sum of ids needs n >= 1".into()));
    }
    let total = Int::from(n * (n + 1) / 2) - slack;
    let mut b = ProgramBuilder::new();
    b.shared("sum", Init::Value(0.into()));
    b.annotate(Annotation::Resource {
        var: "sum".into(),
        bound: LinTerm::constant(total.clone()),
    });
    b.property(Formula::Atom(le(var("sum"), LinTerm::constant(total))));
    for i in 1..=n {
        let p = b.process(&format!("p{i}"));
        b.transition(p, 0, 1, vec![], set("sum", plus("sum", i as i64)));
    }
    build(&b)
}

/// Two processes on one variable: `P1` increments `x` twice, `P2` doubles
/// it twice, starting from `x = 0`, under `always x <= 8`. With
/// `resource` set, `x` is annotated as a resource bounded by 8.
pub fn closely_coupled(resource: bool) -> Program {
    let mut b = ProgramBuilder::new();
    b.shared("x", Init::Value(0.into()));
    if resource {
        b.annotate(Annotation::Resource {
            var: "x".into(),
            bound: LinTerm::constant(8),
        });
    }
    b.property(Formula::Atom(le(var("x"), LinTerm::constant(8))));
    let p1 = b.process("P1");
    b.transition(p1, 0, 1, vec![], set("x", plus("x", 1)));
    b.transition(p1, 1, 2, vec![], set("x", plus("x", 1)));
    let p2 = b.process("P2");
    b.transition(p2, 0, 1, vec![], set("x", double("x")));
    b.transition(p2, 1, 2, vec![], set("x", double("x")));
    b.build().expect("well-formed")
}

/// Like [`closely_coupled`] but each process owns its variable: `P1`
/// increments then doubles `x`, `P2` does the same to `y`.
pub fn loosely_coupled() -> Program {
    let mut b = ProgramBuilder::new();
    b.shared("x", Init::Value(0.into()));
    b.shared("y", Init::Value(0.into()));
    b.property(Formula::conj([
        Formula::Atom(le(var("x"), LinTerm::constant(8))),
        Formula::Atom(le(var("y"), LinTerm::constant(8))),
    ]));
    for (name, v) in [("P1", "x"), ("P2", "y")] {
        let p = b.process(name);
        b.transition(p, 0, 1, vec![], set(v, plus(v, 1)));
        b.transition(p, 1, 2, vec![], set(v, double(v)));
    }
    b.build().expect("well-formed")
}

/// The benchmark families available to `gen` and `bench`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Family {
    ProducerConsumer,
    DiningPhilosophers,
    SumOfIds,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::ProducerConsumer, Family::DiningPhilosophers, Family::SumOfIds];

    pub fn name(self) -> &'static str {
        match self {
            Family::ProducerConsumer => "pc",
            Family::DiningPhilosophers => "phil",
            Family::SumOfIds => "sum",
        }
    }

    pub fn generate(self, n: usize) -> Result<Program, FrontendError> {
        self.with_slack(n, 0)
    }

    /// The same program with the property bound lowered by one, which
    /// makes it unsafe.
    pub fn tightened(self, n: usize) -> Result<Program, FrontendError> {
        self.with_slack(n, 1)
    }

    fn with_slack(self, n: usize, slack: i64) -> Result<Program, FrontendError> {
        match self {
            Family::ProducerConsumer => pc(n, slack),
            Family::DiningPhilosophers => phil(n, slack),
            Family::SumOfIds => sum(n, slack),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = FrontendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FrontendError::Generator(format!("unknown family `{s}` (expected pc, phil or sum)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, render};

    #[test]
    fn sizes() {
        assert_eq!(producer_consumer(1).unwrap().processes.len(), 3);
        assert_eq!(producer_consumer(2).unwrap().processes.len(), 5);
        assert_eq!(dining_philosophers(3).unwrap().processes.len(), 3);
        assert_eq!(sum_of_ids(6).unwrap().processes.len(), 6);
        assert!(dining_philosophers(1).is_err());
        assert!(producer_consumer(0).is_err());
        assert!(sum_of_ids(0).is_err());
    }

    #[test]
    fn bounds() {
        let p = producer_consumer(2).unwrap();
        assert_eq!(p.property, Formula::parse("cons.c <= 8").unwrap());
        let t = Family::ProducerConsumer.tightened(2).unwrap();
        assert_eq!(t.property, Formula::parse("cons.c <= 7").unwrap());
        assert_eq!(Family::SumOfIds.tightened(2).unwrap().property, Formula::parse("sum <= 2").unwrap());
        assert_eq!(Family::DiningPhilosophers.tightened(2).unwrap().property, Formula::parse("eat <= 0").unwrap());
    }

    #[test]
    fn generated_programs_round_trip() {
        for f in Family::ALL {
            for n in 2..=4 {
                let p = f.generate(n).unwrap();
                assert_eq!(parse(&render(&p)).unwrap(), p, "{f} {n}");
            }
        }
        for p in [closely_coupled(false), closely_coupled(true), loosely_coupled()] {
            assert_eq!(parse(&render(&p)).unwrap(), p);
        }
    }

    #[test]
    fn family_names() {
        assert_eq!("phil".parse::<Family>().unwrap(), Family::DiningPhilosophers);
        assert!("bakery".parse::<Family>().is_err());
    }
}
