use alloc::vec::Vec;

use super::{ActionId, LabeledModel, StateId};

/// Allowed deviation of a policy row from a unit sum.
pub const POLICY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy table has {got} rows, model has {expected} states")]
    WrongSize { expected: usize, got: usize },
    #[error("action {action} is not enabled at state {state}")]
    NotEnabled { state: StateId, action: ActionId },
    #[error("distribution at state {state} sums to {sum}")]
    NotNormalized { state: StateId, sum: f64 },
    #[error("negative or non-finite probability at state {state}")]
    InvalidProbability { state: StateId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    Deterministic,
    Randomized,
}

/// Time-invariant map from states to distributions over enabled actions.
///
/// A state with an empty row is outside the policy's domain.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPolicy {
    table: Vec<Vec<(ActionId, f64)>>,
}

impl StationaryPolicy {
    pub fn new(model: &LabeledModel, table: Vec<Vec<(ActionId, f64)>>) -> Result<Self, PolicyError> {
        if table.len() != model.num_states() {
            return Err(PolicyError::WrongSize {
                expected: model.num_states(),
                got: table.len(),
            });
        }
        let mut table = table;
        for (state, row) in table.iter_mut().enumerate() {
            row.retain(|&(_, p)| p != 0.0);
            if row.is_empty() {
                continue;
            }
            let mut sum = 0.0;
            for &(action, p) in row.iter() {
                if !(p.is_finite() && p > 0.0) {
                    return Err(PolicyError::InvalidProbability { state });
                }
                if !model.is_enabled(state, action) {
                    return Err(PolicyError::NotEnabled { state, action });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > POLICY_SUM_TOL {
                return Err(PolicyError::NotNormalized { state, sum });
            }
        }
        Ok(StationaryPolicy { table })
    }

    /// Deterministic policy choosing `actions[q]` at every state.
    pub fn deterministic(model: &LabeledModel, actions: &[ActionId]) -> Result<Self, PolicyError> {
        Self::new(model, actions.iter().map(|&a| alloc::vec![(a, 1.0)]).collect())
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    pub fn distribution(&self, state: StateId) -> &[(ActionId, f64)] {
        &self.table[state]
    }

    pub fn is_defined(&self, state: StateId) -> bool {
        !self.table[state].is_empty()
    }

    pub fn probability(&self, state: StateId, action: ActionId) -> f64 {
        self.table[state]
            .iter()
            .find(|&&(a, _)| a == action)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn kind(&self) -> PolicyKind {
        if self.table.iter().all(|row| row.len() <= 1) {
            PolicyKind::Deterministic
        } else {
            PolicyKind::Randomized
        }
    }

    /// The action chosen at `state` if the row is a point mass.
    pub fn action(&self, state: StateId) -> Option<ActionId> {
        match self.table[state].as_slice() {
            [(a, _)] => Some(*a),
            _ => None,
        }
    }
}
