//! Depth-first symbolic search with optional partial order reduction and
//! state interpolation.
//!
//! All five modes share one engine. They differ in which transitions are
//! expanded at a state and whether interpolants are computed and memoized:
//!
//! | mode         | expanded at a state                                    | memo |
//! |--------------|--------------------------------------------------------|------|
//! | `exhaustive` | every schedulable transition                           | no   |
//! | `por`        | persistent set from independence                       | no   |
//! | `si`         | every schedulable transition                           | yes  |
//! | `por-si`     | persistent set from independence, if its condition holds | yes |
//! | `pdpor-si`   | persistent set from all facts, if its condition holds   | yes  |

mod memo;
mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Model, Solver};
use crate::model::{Program, TransId};
use crate::por::ProcessOrder;

pub use memo::MemoTable;
pub use search::{explore, Exploration};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Mode {
    Exhaustive,
    Por,
    Si,
    PorSi,
    PdporSi,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Exhaustive, Mode::Por, Mode::Si, Mode::PorSi, Mode::PdporSi];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Por => "por",
            Mode::Si => "si",
            Mode::PorSi => "por-si",
            Mode::PdporSi => "pdpor-si",
        }
    }

    pub fn uses_interpolants(self) -> bool {
        matches!(self, Mode::Si | Mode::PorSi | Mode::PdporSi)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode `{0}` (expected exhaustive, por, si, por-si or pdpor-si)")]
pub struct ModeError(pub String);

impl FromStr for Mode {
    type Err = ModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ModeError(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub mode: Mode,
    pub solver: Solver,
    pub timeout: Option<Duration>,
    /// Process priority; `None` keeps declaration order.
    pub order: Option<ProcessOrder>,
    /// Check that every memoized interpolant holds in the state that
    /// produced it.
    pub check_self_subsumption: bool,
}

impl Config {
    pub fn new(mode: Mode) -> Self {
        Config {
            mode,
            solver: Solver::default(),
            timeout: None,
            order: None,
            check_self_subsumption: cfg!(debug_assertions),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Safe,
    Unsafe,
    ResourceLimit,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "SAFE",
            Verdict::Unsafe => "UNSAFE",
            Verdict::ResourceLimit => "RESOURCE_LIMIT",
        })
    }
}

/// A violating trace and an initial valuation that drives it to the
/// violation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub trace: Vec<TransId>,
    pub witness: Model,
}

/// Outcome and counters of one run. `states_visited` counts states that
/// were expanded or checked, `states_subsumed` those pruned by a memoized
/// interpolant, and `traces_completed` the visited states from which no
/// transition was explored.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub verdict: Verdict,
    pub states_visited: u64,
    pub states_subsumed: u64,
    pub traces_completed: u64,
    pub time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Counterexample>,
}

impl ExplorationReport {
    /// Size of the search tree: expanded plus pruned states.
    pub fn total_states(&self) -> u64 {
        self.states_visited + self.states_subsumed
    }
}

impl fmt::Display for ExplorationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict)?;
        writeln!(f, "states visited: {}", self.states_visited)?;
        writeln!(f, "states subsumed: {}", self.states_subsumed)?;
        writeln!(f, "traces completed: {}", self.traces_completed)?;
        write!(f, "time: {} ms", self.time_ms)?;
        if let Some(cex) = &self.counterexample {
            let steps: Vec<String> = cex.trace.iter().map(|t| t.to_string()).collect();
            write!(f, "\ncounterexample: [{}]\nwitness: {}", steps.join(", "), cex.witness)?;
        }
        Ok(())
    }
}

/// Full search without pruning.
pub fn explore_exhaustive(p: &Program) -> ExplorationReport {
    explore(p, &Config::new(Mode::Exhaustive)).report
}

/// Search restricted to persistent sets derived from independence.
pub fn explore_por(p: &Program) -> ExplorationReport {
    explore(p, &Config::new(Mode::Por)).report
}

/// Search with memoized interpolants, optionally combined with persistent
/// sets (`mode` is one of `si`, `por-si`, `pdpor-si`).
pub fn explore_synergy(p: &Program, mode: Mode) -> ExplorationReport {
    assert!(mode.uses_interpolants(), "{mode} does not use interpolants");
    explore(p, &Config::new(mode)).report
}
