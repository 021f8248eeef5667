//! Parallel composition of probabilistic automata.
//!
//! Shared actions synchronize and take the product of both sides'
//! distributions; an action owned by one side only interleaves, with the
//! idle side staying put (a point distribution on its current state).

use std::collections::{HashMap, VecDeque};

use super::automaton::{ActionId, AutomatonBuilder, ProbabilisticAutomaton, StateId};
use super::distribution::CategoricalDistribution;

type Pair = (StateId, StateId);

/// Composes `m1 || m2`. See [`parallel_compose_indexed`] for the pair mapping.
pub fn parallel_compose(
    m1: &ProbabilisticAutomaton,
    m2: &ProbabilisticAutomaton,
) -> ProbabilisticAutomaton {
    parallel_compose_indexed(m1, m2).0
}

/// Composes `m1 || m2` and also returns, for every composed state id, the
/// component states it pairs.
///
/// When both inputs have an initial state only pairs reachable from the
/// initial pair are kept (numbered in breadth-first discovery order);
/// otherwise the full product is built with id `i * |S2| + j` for `(i, j)`.
pub fn parallel_compose_indexed(
    m1: &ProbabilisticAutomaton,
    m2: &ProbabilisticAutomaton,
) -> (ProbabilisticAutomaton, Vec<Pair>) {
    let mut builder = AutomatonBuilder::new();
    let map1: Vec<ActionId> = m1
        .action_names()
        .iter()
        .map(|n| builder.add_action(n.clone()))
        .collect();
    let map2: Vec<ActionId> = m2
        .action_names()
        .iter()
        .map(|n| builder.add_action(n.clone()))
        .collect();
    let shared1: Vec<bool> = m1
        .action_names()
        .iter()
        .map(|n| m2.action_id(n).is_some())
        .collect();
    let shared2: Vec<bool> = m2
        .action_names()
        .iter()
        .map(|n| m1.action_id(n).is_some())
        .collect();

    let mut index = PairIndex::default();
    match (m1.initial(), m2.initial()) {
        (Some(i1), Some(i2)) => {
            let init = index.register((i1, i2), &mut builder, m1, m2);
            builder.set_initial(init).expect("initial pair was just added");
        }
        _ => {
            for i in 0..m1.num_states() {
                for j in 0..m2.num_states() {
                    index.register((i, j), &mut builder, m1, m2);
                }
            }
        }
    }

    let mut pending = Vec::new();
    while let Some((s1, s2)) = index.queue.pop_front() {
        let src = index.ids[&(s1, s2)];
        pending.clear();
        for t1 in m1.transitions_from(s1) {
            if shared1[t1.action] {
                let name = m1.action_name(t1.action);
                for t2 in m2.transitions_from(s2) {
                    if m2.action_name(t2.action) == name {
                        pending.push((map1[t1.action], t1.distribution.product(&t2.distribution)));
                    }
                }
            } else {
                let idle = CategoricalDistribution::point(s2);
                pending.push((map1[t1.action], t1.distribution.product(&idle)));
            }
        }
        for t2 in m2.transitions_from(s2) {
            if !shared2[t2.action] {
                let idle = CategoricalDistribution::point(s1);
                pending.push((map2[t2.action], idle.product(&t2.distribution)));
            }
        }
        for (action, dist) in pending.drain(..) {
            let weights: Vec<(StateId, f64)> = dist
                .iter()
                .map(|(pair, p)| (index.register(*pair, &mut builder, m1, m2), p))
                .collect();
            let mapped = CategoricalDistribution::from_weights(weights)
                .expect("product distribution has positive mass");
            builder
                .add_transition(src, action, mapped)
                .expect("composed ids are valid");
        }
    }

    let pa = builder.build().expect("composition of valid automata is valid");
    (pa, index.pairs)
}

#[derive(Default)]
struct PairIndex {
    ids: HashMap<Pair, StateId>,
    pairs: Vec<Pair>,
    queue: VecDeque<Pair>,
}

impl PairIndex {
    fn register(
        &mut self,
        pair: Pair,
        builder: &mut AutomatonBuilder,
        m1: &ProbabilisticAutomaton,
        m2: &ProbabilisticAutomaton,
    ) -> StateId {
        if let Some(id) = self.ids.get(&pair) {
            return *id;
        }
        let id = builder.add_labelled_state(
            format!("({},{})", m1.state_name(pair.0), m2.state_name(pair.1)),
            m1.labels(pair.0).iter().chain(m2.labels(pair.1)).cloned(),
        );
        self.ids.insert(pair, id);
        self.pairs.push(pair);
        self.queue.push_back(pair);
        id
    }
}
