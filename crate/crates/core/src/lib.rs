//! Temporal-logic control synthesis for labeled Markov decision processes.
//!
//! The crate covers the whole pipeline that turns a labeled model and a
//! deterministic Rabin automaton into an approximately optimal randomized
//! policy:
//!
//! * [`model`]: labeled MDPs / NTSs, Rabin automata and stationary policies.
//! * [`synthesis`]: the product construction, accepting maximal end
//!   components, and the reachability-to-shortest-path conversion.
//! * [`rsp`]: the two-parameter lookahead randomized policy and its
//!   log-likelihood gradient.
//! * [`actor_critic`]: the LSTD actor-critic loop driven by a lazy
//!   transition-probability provider.
//! * [`exact`]: value iteration, exact policy evaluation and brute-force
//!   policy enumeration used as ground truth.
//!
//! Everything here is `no_std` with `alloc`; file formats, the grid
//! environment and the command-line driver live in the `tlac` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod actor_critic;
pub mod exact;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod rsp;
pub mod synthesis;

pub use actor_critic::{
    ModelSource, ProbabilityProvider, ProviderError, RunConfig, RunOutcome, RunTrace, SspProbabilities,
    TransitionSource,
};
pub use model::{
    ActionId, LabeledModel, Letter, Mode, ModelBuilder, ModelError, PolicyError, RabinAutomaton, RabinBuilder, StateId,
    StateSet, StationaryPolicy,
};
pub use rsp::{LookaheadPolicy, RspConfig, Theta};
pub use synthesis::{Amec, EndComponent, LabelTiming, ProductModel, SspModel};
