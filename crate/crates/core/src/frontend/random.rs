//! Seeded generator of small random programs for differential testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Atom, Formula, Int, LinTerm, Rel, Var};
use crate::model::{Annotation, Init, Program, ProgramBuilder};

#[derive(Clone, Copy, Debug)]
pub struct RandomConfig {
    pub max_processes: usize,
    pub max_transitions: usize,
    /// Constants and coefficients are drawn from `[-max_const, max_const]`.
    pub max_const: i64,
    /// Unconstrained variables are assumed to lie in `[0, max_box]`.
    pub max_box: i64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            max_processes: 3,
            max_transitions: 3,
            max_const: 4,
            max_box: 3,
        }
    }
}

const RELS: [Rel; 6] = [Rel::Eq, Rel::Ne, Rel::Le, Rel::Lt, Rel::Ge, Rel::Gt];

#[derive(Clone, Copy, PartialEq)]
enum Flavor {
    Plain,
    Resource,
    Flag,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: RandomConfig,
}

impl Gen {
    fn constant(&mut self) -> i64 {
        self.rng.gen_range(-self.cfg.max_const..=self.cfg.max_const)
    }

    fn term(&mut self, vars: &[Var]) -> LinTerm {
        let k = self.rng.gen_range(1..=2.min(vars.len()));
        let mut t = LinTerm::constant(self.constant());
        for v in vars.choose_multiple(&mut self.rng, k) {
            let mut c = self.rng.gen_range(-2i64..=2);
            if c == 0 {
                c = 1;
            }
            t = t.plus(&LinTerm::scaled_var(c, v.clone()));
        }
        t
    }

    fn atom(&mut self, vars: &[Var]) -> Atom {
        let lhs = self.term(vars);
        let rel = *RELS.choose(&mut self.rng).expect("nonempty");
        Atom::new(lhs, rel, LinTerm::constant(self.constant()))
    }

    fn bound_atom(&mut self, vars: &[Var]) -> Atom {
        let v = vars.choose(&mut self.rng).expect("nonempty").clone();
        let rel = *[Rel::Le, Rel::Lt, Rel::Ge, Rel::Ne].choose(&mut self.rng).expect("nonempty");
        let c = self.rng.gen_range(-self.cfg.max_const..=2 * self.cfg.max_const);
        Atom::new(LinTerm::var(v), rel, LinTerm::constant(c))
    }
}

/// A random well-formed program determined by `seed`.
///
/// Some programs carry a resource variable `r` that is only changed by
/// `r := r + c`, `r := 2*r` or `r := r - c` (with `c > 0`), never read by
/// other transitions and bounded by its own property conjunct. Others carry
/// a flag `f` that is only ever set to 1 and whose being set implies the
/// property.
pub fn random_program(seed: u64, cfg: RandomConfig) -> Program {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
    };
    let flavor = match g.rng.gen_range(0..4) {
        0 => Flavor::Resource,
        1 => Flavor::Flag,
        _ => Flavor::Plain,
    };
    let mut b = ProgramBuilder::new();
    let mut shared: Vec<Var> = vec![Var::new("x"), Var::new("y")];
    if g.rng.gen_bool(0.3) {
        shared.push(Var::new("z"));
    }
    for v in &shared {
        if g.rng.gen_bool(0.6) {
            let c = g.rng.gen_range(-cfg.max_const..=cfg.max_const);
            b.shared(v.clone(), Init::Value(c.into()));
        } else {
            let hi = g.rng.gen_range(0..=cfg.max_box);
            b.shared(v.clone(), Init::Any);
            b.assume(Atom::new(LinTerm::zero(), Rel::Le, LinTerm::var(v.clone())));
            b.assume(Atom::new(LinTerm::var(v.clone()), Rel::Le, LinTerm::constant(hi)));
        }
    }
    let special = match flavor {
        Flavor::Plain => None,
        Flavor::Resource => Some(Var::new("r")),
        Flavor::Flag => Some(Var::new("f")),
    };
    if let Some(s) = &special {
        b.shared(s.clone(), Init::Value(0.into()));
    }

    let nproc = g.rng.gen_range(1..=cfg.max_processes.max(1));
    let names: Vec<String> = (1..=nproc).map(|i| format!("P{i}")).collect();
    let locals: Vec<Option<Var>> = names
        .iter()
        .map(|n| {
            g.rng.gen_bool(0.3).then(|| {
                let c = g.rng.gen_range(0..=2i64);
                b.local(n, "l", Init::Value(c.into()));
                Var::new(format!("{n}.l"))
            })
        })
        .collect();

    let mut readable = shared.clone();
    if flavor == Flavor::Flag {
        readable.push(Var::new("f"));
    }
    for (i, name) in names.iter().enumerate() {
        let p = b.process(name);
        let mut own = readable.clone();
        let mut writable = shared.clone();
        if let Some(l) = &locals[i] {
            own.push(l.clone());
            writable.push(l.clone());
        }
        let ntrans = g.rng.gen_range(1..=cfg.max_transitions.max(1));
        let mut top = 0u32;
        for _ in 0..ntrans {
            let src = g.rng.gen_range(0..=top);
            let dst = if src < top && g.rng.gen_bool(0.3) {
                g.rng.gen_range(src + 1..=top)
            } else {
                top += 1;
                top
            };
            let mut guard = Vec::new();
            if g.rng.gen_bool(0.4) {
                guard.push(g.atom(&own));
                if g.rng.gen_bool(0.25) {
                    guard.push(g.atom(&own));
                }
            }
            let roll: f64 = g.rng.gen();
            let assign = match &special {
                Some(r) if flavor == Flavor::Resource && roll < 0.35 => {
                    let c = g.rng.gen_range(1..=cfg.max_const.max(1));
                    let rt = LinTerm::var(r.clone());
                    let e = match g.rng.gen_range(0..3) {
                        0 => rt.plus_constant(&Int::from(c)),
                        1 => rt.scaled(&Int::from(2)),
                        _ => rt.plus_constant(&Int::from(-c)),
                    };
                    Some((r.clone(), e))
                }
                Some(f) if flavor == Flavor::Flag && roll < 0.3 => Some((f.clone(), LinTerm::constant(1))),
                _ if roll < 0.85 => {
                    let v = writable.choose(&mut g.rng).expect("nonempty").clone();
                    Some((v, g.term(&own)))
                }
                _ => None,
            };
            b.transition(p, src, dst, guard, assign);
        }
    }

    let mut base = vec![Formula::Atom(g.bound_atom(&shared))];
    if g.rng.gen_bool(0.4) {
        base.push(Formula::Atom(g.bound_atom(&shared)));
    }
    let base = if g.rng.gen_bool(0.5) {
        Formula::conj(base)
    } else {
        Formula::disj(base)
    };
    let property = match (&special, flavor) {
        (Some(r), Flavor::Resource) => {
            let c = g.rng.gen_range(0..=2 * cfg.max_const);
            b.annotate(Annotation::Resource {
                var: r.clone(),
                bound: LinTerm::constant(c),
            });
            Formula::conj([base, Formula::atom(LinTerm::var(r.clone()), Rel::Le, LinTerm::constant(c))])
        }
        (Some(f), Flavor::Flag) => {
            b.annotate(Annotation::Flag(f.clone()));
            Formula::disj([Formula::atom(LinTerm::var(f.clone()), Rel::Eq, LinTerm::constant(1)), base])
        }
        _ => base,
    };
    b.property(property);
    b.build().expect("generator emits well-formed programs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, render};

    #[test]
    fn deterministic_and_round_trips() {
        for seed in 0..200 {
            let p = random_program(seed, RandomConfig::default());
            assert_eq!(p, random_program(seed, RandomConfig::default()));
            assert_eq!(parse(&render(&p)).unwrap(), p, "seed {seed}:\n{}", render(&p));
            assert!(p.processes.len() <= 3);
            assert!(p.processes.iter().all(|q| q.transitions.len() <= 3));
        }
    }
}
