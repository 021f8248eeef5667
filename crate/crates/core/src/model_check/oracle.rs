//! Brute-force reference for bounded safety.
//!
//! Unfolds the automaton into its tree of path prefixes up to the horizon
//! and resolves every nondeterministic choice separately at every prefix,
//! i.e. it optimizes over all history-dependent deterministic schedulers by
//! enumeration. No value arrays are shared between prefixes, so it does not
//! rely on the per-step recursion used by [`super::check_bounded_safety`].

use super::{BoundedSafetyQuery, OptMode};
use crate::error::{Error, Result};
use crate::pa::{ActionId, ProbabilisticAutomaton, StateId};

/// Maximum number of path prefixes the oracle will visit.
pub const ORACLE_NODE_LIMIT: usize = 1_000_000;

struct Enumerator<'a> {
    pa: &'a ProbabilisticAutomaton,
    q: &'a BoundedSafetyQuery,
    visited: usize,
}

impl Enumerator<'_> {
    fn visit(&mut self) -> Result<()> {
        self.visited += 1;
        if self.visited > ORACLE_NODE_LIMIT {
            return Err(Error::TooLarge(format!(
                "more than {ORACLE_NODE_LIMIT} path prefixes"
            )));
        }
        Ok(())
    }

    /// Optimal probability that the path continuing from `state` with
    /// `remaining` steps left never meets an unsafe state.
    fn safe_mass(&mut self, state: StateId, remaining: usize, first: Option<ActionId>) -> Result<f64> {
        self.visit()?;
        if self.q.is_unsafe(state) {
            return Ok(0.0);
        }
        if remaining == 0 || self.pa.is_terminal(state) {
            return Ok(1.0);
        }
        let mut best: Option<f64> = None;
        for t in self.pa.transitions_from(state) {
            if first.is_some_and(|a| a != t.action) {
                continue;
            }
            let mut mass = 0.0;
            for (next, p) in t.distribution.iter() {
                mass += p * self.safe_mass(*next, remaining - 1, None)?;
            }
            best = Some(match (best, self.q.mode()) {
                (None, _) => mass,
                (Some(b), OptMode::Min) => b.min(mass),
                (Some(b), OptMode::Max) => b.max(mass),
            });
        }
        best.ok_or_else(|| {
            Error::InvalidQuery(format!("action {first:?} is not enabled in state {state}"))
        })
    }
}

/// Optimal bounded safety probability from `initial` by exhaustive
/// enumeration of path prefixes and scheduler choices.
pub fn brute_force_safety(
    pa: &ProbabilisticAutomaton,
    q: &BoundedSafetyQuery,
    initial: StateId,
) -> Result<f64> {
    run(pa, q, initial, None)
}

/// As [`brute_force_safety`], with the first step forced through `action`.
/// Unsafe `initial` states yield zero regardless of `action`.
pub fn brute_force_safety_from_action(
    pa: &ProbabilisticAutomaton,
    q: &BoundedSafetyQuery,
    initial: StateId,
    action: ActionId,
) -> Result<f64> {
    run(pa, q, initial, Some(action))
}

fn run(
    pa: &ProbabilisticAutomaton,
    q: &BoundedSafetyQuery,
    initial: StateId,
    first: Option<ActionId>,
) -> Result<f64> {
    if initial >= pa.num_states() {
        return Err(Error::UnknownState(initial));
    }
    let mut e = Enumerator { pa, q, visited: 0 };
    e.safe_mass(initial, q.horizon(), first)
}
