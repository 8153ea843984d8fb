//! From a labeled model and a Rabin automaton to a stochastic shortest path
//! problem: product construction, accepting maximal end components, goal and
//! zero-probability sets, and the reachability-to-cost conversion.

mod mec;
mod product;
mod ssp;

pub use mec::{amecs, goal_and_bad_sets, inside_amec_policy, max_end_components, Amec, EndComponent};
pub use product::{build_product, LabelTiming, ProductModel, ProductPair};
pub use ssp::{mrp_to_ssp, SspModel};

use alloc::string::String;

use crate::model::{ModelError, RabinError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("model and automaton propositions differ: model has `{model}`, automaton has `{automaton}`")]
    PropositionMismatch { model: String, automaton: String },
    #[error("initial product state already lies in an accepting end component")]
    TrivialInitial,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rabin(#[from] RabinError),
}
