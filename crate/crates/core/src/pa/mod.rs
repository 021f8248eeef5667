//! Probabilistic automata: distributions, the automaton data model,
//! schedulers and parallel composition.

mod automaton;
mod compose;
mod distribution;
pub mod dump;

pub use automaton::{ActionId, AutomatonBuilder, ProbabilisticAutomaton, Scheduler, StateId, Transition};
pub use compose::{parallel_compose, parallel_compose_indexed};
pub use distribution::{CategoricalDistribution, DROP_THRESHOLD, MASS_TOLERANCE};
