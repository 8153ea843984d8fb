use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ActionId, Letter, StateId, MAX_PROPS, STOCHASTIC_TOL};

/// Whether transition weights are probabilities or possibility flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Weights are probabilities; every enabled row sums to one.
    Mdp,
    /// Weights are possibility flags, always exactly `1.0`.
    Nts,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("model has no states")]
    NoStates,
    #[error("state {0} is out of range")]
    DanglingState(StateId),
    #[error("action id {0} is out of range")]
    UnknownAction(ActionId),
    #[error("state {0} has no enabled action")]
    EmptyEnabled(StateId),
    #[error("weights of state {state} under action `{action}` sum to {sum}, expected 1")]
    Stochasticity { state: StateId, action: String, sum: f64 },
    #[error("invalid weight {weight} on ({state}, `{action}`) in {mode:?} mode")]
    InvalidWeight {
        state: StateId,
        action: String,
        weight: f64,
        mode: Mode,
    },
    #[error("{0} propositions given; at most 16 are supported")]
    TooManyProps(usize),
    #[error("duplicate proposition `{0}`")]
    DuplicateProp(String),
    #[error("label {letter:#b} of state {state} uses undeclared propositions")]
    InvalidLabel { state: StateId, letter: Letter },
}

/// One enabled action at a state together with its successor distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub action: ActionId,
    /// Successors sorted by state id, with strictly positive weights.
    pub successors: Vec<(StateId, f64)>,
}

/// A labeled MDP or labeled NTS over dense state and action indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledModel {
    mode: Mode,
    initial: StateId,
    state_names: Vec<String>,
    actions: Vec<String>,
    props: Vec<String>,
    labels: Vec<Letter>,
    choices: Vec<Vec<Choice>>,
}

impl LabeledModel {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, action: ActionId) -> &str {
        &self.actions[action]
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.state_names[state]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    /// Observation set `h(q)` as a bitmask over [`props`](Self::props).
    pub fn label(&self, state: StateId) -> Letter {
        self.labels[state]
    }

    pub fn labels(&self) -> &[Letter] {
        &self.labels
    }

    /// Enabled actions of `state` in their canonical order, with successors.
    pub fn choices(&self, state: StateId) -> &[Choice] {
        &self.choices[state]
    }

    pub fn enabled(&self, state: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn is_enabled(&self, state: StateId, action: ActionId) -> bool {
        self.choice(state, action).is_some()
    }

    pub fn choice(&self, state: StateId, action: ActionId) -> Option<&Choice> {
        self.choices[state].iter().find(|c| c.action == action)
    }

    pub fn successors(&self, state: StateId, action: ActionId) -> Option<&[(StateId, f64)]> {
        self.choice(state, action).map(|c| c.successors.as_slice())
    }

    /// Total number of enabled (state, action) pairs.
    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    /// All states reachable in one step under any action.
    pub fn post(&self, state: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.choices[state]
            .iter()
            .flat_map(|c| c.successors.iter().map(|&(t, _)| t))
    }

    /// Copy of the model with a different initial state.
    pub fn with_initial(&self, initial: StateId) -> Result<Self, ModelError> {
        if initial >= self.num_states() {
            return Err(ModelError::DanglingState(initial));
        }
        let mut m = self.clone();
        m.initial = initial;
        Ok(m)
    }
}

/// Incremental constructor for [`LabeledModel`]; validation happens in
/// [`build`](ModelBuilder::build).
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    mode: Mode,
    initial: StateId,
    state_names: Vec<String>,
    actions: Vec<String>,
    props: Vec<String>,
    labels: Vec<Letter>,
    choices: Vec<Vec<Choice>>,
}

impl ModelBuilder {
    pub fn new(mode: Mode, num_states: usize) -> Self {
        ModelBuilder {
            mode,
            initial: 0,
            state_names: (0..num_states).map(|i| i.to_string()).collect(),
            actions: Vec::new(),
            props: Vec::new(),
            labels: alloc::vec![0; num_states],
            choices: alloc::vec![Vec::new(); num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn initial(&mut self, state: StateId) -> &mut Self {
        self.initial = state;
        self
    }

    pub fn state_name(&mut self, state: StateId, name: impl Into<String>) -> &mut Self {
        self.state_names[state] = name.into();
        self
    }

    pub fn props<S: Into<String>>(&mut self, props: impl IntoIterator<Item = S>) -> &mut Self {
        self.props = props.into_iter().map(Into::into).collect();
        self
    }

    /// Interns an action name, returning its id.
    pub fn action(&mut self, name: &str) -> ActionId {
        match self.actions.iter().position(|a| a == name) {
            Some(id) => id,
            None => {
                self.actions.push(name.into());
                self.actions.len() - 1
            }
        }
    }

    pub fn label(&mut self, state: StateId, letter: Letter) -> &mut Self {
        self.labels[state] = letter;
        self
    }

    /// Makes `action` enabled at `state` without adding any successor.
    pub fn enable(&mut self, state: StateId, action: ActionId) -> &mut Self {
        if !self.choices[state].iter().any(|c| c.action == action) {
            self.choices[state].push(Choice {
                action,
                successors: Vec::new(),
            });
        }
        self
    }

    /// Adds weight to `state --action--> target`. Zero weights only mark the
    /// action as enabled. Repeated edges accumulate (MDP) or saturate (NTS).
    pub fn transition(&mut self, state: StateId, action: ActionId, target: StateId, weight: f64) -> &mut Self {
        self.enable(state, action);
        if weight == 0.0 {
            return self;
        }
        let mode = self.mode;
        let choice = self.choices[state]
            .iter_mut()
            .find(|c| c.action == action)
            .expect("enabled above");
        match choice.successors.iter_mut().find(|(t, _)| *t == target) {
            Some((_, w)) => match mode {
                Mode::Mdp => *w += weight,
                Mode::Nts => *w = w.max(weight),
            },
            None => choice.successors.push((target, weight)),
        }
        self
    }

    pub fn build(mut self) -> Result<LabeledModel, ModelError> {
        let n = self.num_states();
        if n == 0 {
            return Err(ModelError::NoStates);
        }
        if self.initial >= n {
            return Err(ModelError::DanglingState(self.initial));
        }
        if self.props.len() > MAX_PROPS {
            return Err(ModelError::TooManyProps(self.props.len()));
        }
        for (i, p) in self.props.iter().enumerate() {
            if self.props[..i].contains(p) {
                return Err(ModelError::DuplicateProp(p.clone()));
            }
        }
        let prop_mask: Letter = if self.props.is_empty() {
            0
        } else {
            (1 << self.props.len()) - 1
        };
        for (state, &letter) in self.labels.iter().enumerate() {
            if letter & !prop_mask != 0 {
                return Err(ModelError::InvalidLabel { state, letter });
            }
        }
        for (state, choices) in self.choices.iter_mut().enumerate() {
            if choices.is_empty() {
                return Err(ModelError::EmptyEnabled(state));
            }
            for choice in choices.iter_mut() {
                if choice.action >= self.actions.len() {
                    return Err(ModelError::UnknownAction(choice.action));
                }
                let action_name = || self.actions[choice.action].clone();
                for &(target, weight) in &choice.successors {
                    if target >= n {
                        return Err(ModelError::DanglingState(target));
                    }
                    let valid = match self.mode {
                        Mode::Mdp => weight.is_finite() && weight > 0.0 && weight <= 1.0 + STOCHASTIC_TOL,
                        Mode::Nts => weight == 1.0,
                    };
                    if !valid {
                        return Err(ModelError::InvalidWeight {
                            state,
                            action: action_name(),
                            weight,
                            mode: self.mode,
                        });
                    }
                }
                let sum: f64 = choice.successors.iter().map(|&(_, w)| w).sum();
                let ok = match self.mode {
                    Mode::Mdp => (sum - 1.0).abs() <= STOCHASTIC_TOL,
                    Mode::Nts => !choice.successors.is_empty(),
                };
                if !ok {
                    return Err(ModelError::Stochasticity {
                        state,
                        action: action_name(),
                        sum,
                    });
                }
                choice.successors.sort_by_key(|&(t, _)| t);
            }
        }
        Ok(LabeledModel {
            mode: self.mode,
            initial: self.initial,
            state_names: self.state_names,
            actions: self.actions,
            props: self.props,
            labels: self.labels,
            choices: self.choices,
        })
    }
}

/// Possibilistic abstraction of an MDP: every positive weight becomes `1`.
/// Identity on NTS-mode inputs.
pub fn nts_from_mdp(m: &LabeledModel) -> LabeledModel {
    let mut out = m.clone();
    out.mode = Mode::Nts;
    for choices in &mut out.choices {
        for choice in choices {
            choice.successors.retain(|&(_, w)| w > 0.0);
            for (_, w) in &mut choice.successors {
                *w = 1.0;
            }
        }
    }
    out
}
