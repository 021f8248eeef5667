use std::collections::{BTreeSet, HashMap};

use super::distribution::CategoricalDistribution;
use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// One element of the transition relation: `source --action--> distribution`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: StateId,
    pub action: ActionId,
    pub distribution: CategoricalDistribution<StateId>,
}

/// A finite probabilistic automaton with dense state and action ids.
///
/// Several transitions may share the same `(source, action)` pair; that is
/// nondeterminism resolved by a scheduler. Names live in side tables and are
/// only used for export and debugging.
#[derive(Debug, Clone)]
pub struct ProbabilisticAutomaton {
    state_names: Vec<String>,
    state_index: HashMap<String, StateId>,
    initial: Option<StateId>,
    actions: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    transitions: Vec<Transition>,
    offsets: Vec<usize>,
}

impl ProbabilisticAutomaton {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> Option<StateId> {
        self.initial
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|n| n == name)
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn labels(&self, s: StateId) -> &BTreeSet<String> {
        &self.labels[s]
    }

    pub fn has_label(&self, s: StateId, label: &str) -> bool {
        self.labels[s].contains(label)
    }

    pub fn states_with_label(&self, label: &str) -> Vec<StateId> {
        (0..self.num_states())
            .filter(|&s| self.has_label(s, label))
            .collect()
    }

    /// All transitions, grouped by source state.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transitions_from(&self, s: StateId) -> &[Transition] {
        &self.transitions[self.offsets[s]..self.offsets[s + 1]]
    }

    /// A state without outgoing transitions.
    pub fn is_terminal(&self, s: StateId) -> bool {
        self.offsets[s] == self.offsets[s + 1]
    }

    /// Distinct action ids enabled in `s`, ascending.
    pub fn available_actions(&self, s: StateId) -> Vec<ActionId> {
        let mut acts: Vec<ActionId> = self.transitions_from(s).iter().map(|t| t.action).collect();
        acts.sort_unstable();
        acts.dedup();
        acts
    }

    pub fn point_distribution(&self, s: StateId) -> Result<CategoricalDistribution<StateId>> {
        if s >= self.num_states() {
            return Err(Error::UnknownState(s));
        }
        Ok(CategoricalDistribution::point(s))
    }
}

/// Incremental construction of a [`ProbabilisticAutomaton`].
#[derive(Debug, Default, Clone)]
pub struct AutomatonBuilder {
    state_names: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    actions: Vec<String>,
    initial: Option<StateId>,
    transitions: Vec<Transition>,
}

impl AutomatonBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(states: usize, transitions: usize) -> Self {
        AutomatonBuilder {
            state_names: Vec::with_capacity(states),
            labels: Vec::with_capacity(states),
            transitions: Vec::with_capacity(transitions),
            ..Default::default()
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> StateId {
        self.state_names.push(name.into());
        self.labels.push(BTreeSet::new());
        self.state_names.len() - 1
    }

    pub fn add_labelled_state<I, L>(&mut self, name: impl Into<String>, labels: I) -> StateId
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let s = self.add_state(name);
        self.labels[s].extend(labels.into_iter().map(Into::into));
        s
    }

    pub fn add_label(&mut self, s: StateId, label: impl Into<String>) -> Result<()> {
        self.labels
            .get_mut(s)
            .ok_or(Error::UnknownState(s))?
            .insert(label.into());
        Ok(())
    }

    /// Returns the id of action `name`, registering it on first use.
    pub fn add_action(&mut self, name: impl Into<String>) -> ActionId {
        let name = name.into();
        match self.actions.iter().position(|a| *a == name) {
            Some(a) => a,
            None => {
                self.actions.push(name);
                self.actions.len() - 1
            }
        }
    }

    pub fn set_initial(&mut self, s: StateId) -> Result<()> {
        if s >= self.state_names.len() {
            return Err(Error::UnknownState(s));
        }
        self.initial = Some(s);
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn add_transition(
        &mut self,
        source: StateId,
        action: ActionId,
        distribution: CategoricalDistribution<StateId>,
    ) -> Result<()> {
        if source >= self.state_names.len() {
            return Err(Error::UnknownState(source));
        }
        if action >= self.actions.len() {
            return Err(Error::UnknownAction(action));
        }
        self.transitions.push(Transition {
            source,
            action,
            distribution,
        });
        Ok(())
    }

    pub fn build(self) -> Result<ProbabilisticAutomaton> {
        let n = self.state_names.len();
        let mut state_index = HashMap::with_capacity(n);
        for (i, name) in self.state_names.iter().enumerate() {
            if state_index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidAutomaton(format!("duplicate state name {name}")));
            }
        }
        let mut transitions = self.transitions;
        for t in &transitions {
            if let Some((bad, _)) = t.distribution.iter().find(|(s, _)| **s >= n) {
                return Err(Error::InvalidAutomaton(format!(
                    "transition from {} targets unknown state {bad}",
                    t.source
                )));
            }
        }
        // stable: insertion order survives within a source state
        transitions.sort_by_key(|t| t.source);
        let mut offsets = vec![0usize; n + 1];
        for t in &transitions {
            offsets[t.source + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(ProbabilisticAutomaton {
            state_names: self.state_names,
            state_index,
            initial: self.initial,
            actions: self.actions,
            labels: self.labels,
            transitions,
            offsets,
        })
    }
}

/// A deterministic memoryless scheduler: for every non-terminal state, the
/// index of the chosen transition within [`ProbabilisticAutomaton::transitions_from`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduler {
    choice: Vec<Option<usize>>,
}

impl Scheduler {
    pub fn new(pa: &ProbabilisticAutomaton, choice: Vec<Option<usize>>) -> Result<Self> {
        if choice.len() != pa.num_states() {
            return Err(Error::InvalidAutomaton(format!(
                "scheduler covers {} states, automaton has {}",
                choice.len(),
                pa.num_states()
            )));
        }
        for (s, c) in choice.iter().enumerate() {
            let available = pa.transitions_from(s).len();
            match c {
                None if available > 0 => {
                    return Err(Error::InvalidAutomaton(format!(
                        "scheduler leaves non-terminal state {s} unresolved"
                    )))
                }
                Some(i) if *i >= available => {
                    return Err(Error::InvalidAutomaton(format!(
                        "scheduler picks transition {i} of state {s}, which has {available}"
                    )))
                }
                _ => {}
            }
        }
        Ok(Scheduler { choice })
    }

    /// Picks the first available transition everywhere.
    pub fn first_choice(pa: &ProbabilisticAutomaton) -> Self {
        let choice = (0..pa.num_states())
            .map(|s| (!pa.is_terminal(s)).then_some(0))
            .collect();
        Scheduler { choice }
    }

    pub fn choice(&self, s: StateId) -> Option<usize> {
        self.choice[s]
    }

    pub fn transition<'a>(&self, pa: &'a ProbabilisticAutomaton, s: StateId) -> Option<&'a Transition> {
        self.choice[s].map(|i| &pa.transitions_from(s)[i])
    }
}
