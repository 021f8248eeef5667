//! Step-bounded safety probabilities by backward value iteration.
//!
//! For a query `(unsafe, T, mode)` the engine computes, for every state `s`
//! and every action `a` enabled in `s`, the optimal probability of avoiding
//! `unsafe` during steps `0..=T` when the first step is taken through `a`.
//! The recursion optimizes per step, which yields the infimum (or supremum)
//! over all schedulers for bounded invariance; schedulers are never
//! materialized.

mod oracle;
mod table;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use oracle::{brute_force_safety, brute_force_safety_from_action, ORACLE_NODE_LIMIT};
pub use table::{SafetyEntry, SafetyTable};

use crate::error::{Error, Result};
use crate::pa::{ActionId, ProbabilisticAutomaton, StateId, Transition};

/// Largest accepted horizon.
pub const MAX_HORIZON: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Min,
    Max,
}

impl OptMode {
    fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            OptMode::Min => a.min(b),
            OptMode::Max => a.max(b),
        }
    }

    fn neutral(self) -> f64 {
        match self {
            OptMode::Min => f64::INFINITY,
            OptMode::Max => f64::NEG_INFINITY,
        }
    }
}

impl std::fmt::Display for OptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptMode::Min => "min",
            OptMode::Max => "max",
        })
    }
}

impl std::str::FromStr for OptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(OptMode::Min),
            "max" => Ok(OptMode::Max),
            other => Err(Error::InvalidQuery(format!("unknown mode {other}"))),
        }
    }
}

/// `□≤T (s ∉ unsafe)` together with the scheduler optimization direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSafetyQuery {
    unsafe_mask: Vec<bool>,
    horizon: usize,
    mode: OptMode,
}

impl BoundedSafetyQuery {
    pub fn new(
        pa: &ProbabilisticAutomaton,
        unsafe_states: impl IntoIterator<Item = StateId>,
        horizon: usize,
        mode: OptMode,
    ) -> Result<Self> {
        if horizon > MAX_HORIZON {
            return Err(Error::InvalidQuery(format!(
                "horizon {horizon} exceeds {MAX_HORIZON}"
            )));
        }
        let mut unsafe_mask = vec![false; pa.num_states()];
        for s in unsafe_states {
            *unsafe_mask
                .get_mut(s)
                .ok_or_else(|| Error::InvalidQuery(format!("unsafe state {s} is not in the automaton")))? = true;
        }
        Ok(BoundedSafetyQuery {
            unsafe_mask,
            horizon,
            mode,
        })
    }

    /// Unsafe states are the ones carrying `label`.
    pub fn from_label(
        pa: &ProbabilisticAutomaton,
        label: &str,
        horizon: usize,
        mode: OptMode,
    ) -> Result<Self> {
        Self::new(pa, pa.states_with_label(label), horizon, mode)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> OptMode {
        self.mode
    }

    pub fn is_unsafe(&self, s: StateId) -> bool {
        self.unsafe_mask[s]
    }

    pub fn unsafe_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.unsafe_mask
            .iter()
            .enumerate()
            .filter_map(|(s, u)| u.then_some(s))
    }

    fn check_matches(&self, pa: &ProbabilisticAutomaton) -> Result<()> {
        if self.unsafe_mask.len() != pa.num_states() {
            return Err(Error::InvalidQuery(format!(
                "query built for {} states, automaton has {}",
                self.unsafe_mask.len(),
                pa.num_states()
            )));
        }
        Ok(())
    }
}

fn expected_value(t: &Transition, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (s, p) in t.distribution.iter() {
        acc += p * values[*s];
    }
    acc
}

/// One backward step: `V_{k+1}` from `V_k`.
fn sweep(pa: &ProbabilisticAutomaton, q: &BoundedSafetyQuery, prev: &[f64]) -> Vec<f64> {
    (0..pa.num_states())
        .into_par_iter()
        .map(|s| {
            if q.unsafe_mask[s] {
                return 0.0;
            }
            let trans = pa.transitions_from(s);
            if trans.is_empty() {
                return 1.0;
            }
            trans
                .iter()
                .fold(q.mode.neutral(), |best, t| q.mode.pick(best, expected_value(t, prev)))
        })
        .collect()
}

fn initial_values(q: &BoundedSafetyQuery) -> Vec<f64> {
    q.unsafe_mask.iter().map(|&u| if u { 0.0 } else { 1.0 }).collect()
}

/// Optimal safety value `V_k(s)` of every state for `k = q.horizon()`.
pub fn state_values(pa: &ProbabilisticAutomaton, q: &BoundedSafetyQuery) -> Result<Vec<f64>> {
    q.check_matches(pa)?;
    let mut v = initial_values(q);
    for _ in 0..q.horizon {
        v = sweep(pa, q, &v);
    }
    Ok(v)
}

/// Computes the per-(state, action) safety table for `q`.
///
/// Entry `(s, a)` is zero when `s` is unsafe, one when the horizon is zero,
/// and otherwise the optimum over the `a`-transitions of `s` of the expected
/// `V_{T-1}` of the successor.
pub fn check_bounded_safety(pa: &ProbabilisticAutomaton, q: &BoundedSafetyQuery) -> Result<SafetyTable> {
    q.check_matches(pa)?;
    let mut v = initial_values(q);
    for _ in 1..q.horizon.max(1) {
        v = sweep(pa, q, &v);
    }
    let rows: Vec<Vec<SafetyEntry>> = (0..pa.num_states())
        .into_par_iter()
        .map(|s| {
            let actions = pa.available_actions(s);
            actions
                .into_iter()
                .map(|a| SafetyEntry {
                    state: s,
                    action: a,
                    probability: entry_value(pa, q, &v, s, a),
                })
                .collect()
        })
        .collect();
    let entries = rows.into_iter().flatten().collect();
    SafetyTable::from_entries(pa.num_states(), q.horizon, q.mode, entries)
}

fn entry_value(
    pa: &ProbabilisticAutomaton,
    q: &BoundedSafetyQuery,
    prev: &[f64],
    s: StateId,
    a: ActionId,
) -> f64 {
    if q.unsafe_mask[s] {
        return 0.0;
    }
    if q.horizon == 0 {
        return 1.0;
    }
    pa.transitions_from(s)
        .iter()
        .filter(|t| t.action == a)
        .fold(q.mode.neutral(), |best, t| q.mode.pick(best, expected_value(t, prev)))
}
