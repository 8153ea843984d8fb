//! Labeled transition models, Rabin automata and stationary policies.

mod labeled;
mod policy;
mod rabin;
mod set;

pub use labeled::{nts_from_mdp, Choice, LabeledModel, Mode, ModelBuilder, ModelError};
pub use policy::{PolicyError, PolicyKind, StationaryPolicy};
pub use rabin::{dra_step, RabinAutomaton, RabinBuilder, RabinError, RabinPair};
pub use set::StateSet;

/// Dense state index.
pub type StateId = usize;
/// Dense index into a model's global action alphabet.
pub type ActionId = usize;
/// A subset of the observation set, one bit per proposition.
pub type Letter = u32;

/// Upper bound on the number of observations, so that `2^Π` stays enumerable.
pub const MAX_PROPS: usize = 16;

/// Tolerance on the row sums of MDP transition weights.
pub const STOCHASTIC_TOL: f64 = 1e-9;
