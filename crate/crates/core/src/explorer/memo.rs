//! Interpolants recorded per program point.

use std::collections::BTreeMap;

use crate::formula::{Formula, Solver, SolverError};
use crate::model::{GlobalLoc, SymState};

/// For each program point, the interpolants of fully explored safe
/// subtrees rooted there, in the order they were found.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct MemoTable {
    entries: BTreeMap<GlobalLoc, Vec<Formula>>,
}

impl MemoTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// The first interpolant at the state's location that the state
    /// entails.
    pub fn memoed(&self, solver: &Solver, s: &SymState) -> Result<Option<&Formula>, SolverError> {
        let Some(list) = self.entries.get(&s.loc) else {
            return Ok(None);
        };
        for f in list {
            if solver.entails(&s.pc, f)? {
                return Ok(Some(f));
            }
        }
        Ok(None)
    }

    pub fn insert(&mut self, loc: GlobalLoc, f: Formula) {
        let list = self.entries.entry(loc).or_default();
        if !list.contains(&f) {
            list.push(f);
        }
    }

    pub fn get(&self, loc: &GlobalLoc) -> &[Formula] {
        self.entries.get(loc).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GlobalLoc, &Formula)> {
        self.entries.iter().flat_map(|(l, fs)| fs.iter().map(move |f| (l, f)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(pc: &str) -> SymState {
        SymState {
            loc: GlobalLoc(vec![1, 0]),
            pc: Formula::parse(pc).unwrap(),
            depth: 1,
        }
    }

    #[test]
    fn lookups() {
        let solver = Solver::default();
        let mut m = MemoTable::new();
        assert_eq!(m.memoed(&solver, &state("x = 5")).unwrap(), None);
        let f = Formula::parse("x <= 7").unwrap();
        m.insert(GlobalLoc(vec![1, 0]), f.clone());
        assert_eq!(m.memoed(&solver, &state("x = 5")).unwrap(), Some(&f));
        assert_eq!(m.memoed(&solver, &state("true")).unwrap(), None);
        let elsewhere = SymState {
            loc: GlobalLoc(vec![0, 0]),
            ..state("x = 5")
        };
        assert_eq!(m.memoed(&solver, &elsewhere).unwrap(), None);
    }
}
