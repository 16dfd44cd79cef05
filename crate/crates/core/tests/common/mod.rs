//! Programs shared by the integration tests.

#![allow(dead_code)]

use synpor::frontend::{closely_coupled, loosely_coupled, parse, random_program, Family, RandomConfig};
use synpor::model::Program;

pub const RANDOM_PROGRAMS: u64 = 200;

/// Named family instances small enough for full trace enumeration.
pub fn enumerable_families() -> Vec<(String, Program)> {
    let mut out = vec![
        ("closely-coupled".to_string(), closely_coupled(false)),
        ("closely-coupled+resource".to_string(), closely_coupled(true)),
        ("loosely-coupled".to_string(), loosely_coupled()),
    ];
    for (family, sizes) in [
        (Family::SumOfIds, &[1usize, 2, 3][..]),
        (Family::ProducerConsumer, &[1, 2]),
        (Family::DiningPhilosophers, &[2]),
    ] {
        for &n in sizes {
            out.push((format!("{family}-{n}"), family.generate(n).unwrap()));
        }
    }
    out
}

pub fn random_corpus() -> Vec<(String, Program)> {
    (0..RANDOM_PROGRAMS)
        .map(|seed| (format!("random-{seed}"), random_program(seed, RandomConfig::default())))
        .collect()
}

/// Two processes where running the decrement first keeps `r` in bounds
/// but running the increment first does not.
pub fn sub_then_add() -> Program {
    parse(
        "shared r = 0\n\
         property always r <= 0\n\
         process A {\n  0 -> 1 : r := r - 1;\n}\n\
         process B {\n  0 -> 1 : r := r + 1;\n}\n",
    )
    .unwrap()
}
