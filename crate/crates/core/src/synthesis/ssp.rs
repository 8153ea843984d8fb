use alloc::string::String;
use alloc::vec::Vec;

use super::{ProductModel, SynthesisError};
use crate::model::{LabeledModel, Mode, ModelBuilder, StateId, StateSet};

/// Stochastic shortest path model obtained from a product and its goal set.
///
/// States are the non-goal product states, in product order, followed by the
/// dummy terminal.
#[derive(Clone, Debug)]
pub struct SspModel {
    model: LabeledModel,
    terminal: StateId,
    bad: StateSet,
    origin: Vec<Option<StateId>>,
    index: Vec<Option<StateId>>,
}

impl SspModel {
    pub fn model(&self) -> &LabeledModel {
        &self.model
    }

    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    pub fn terminal(&self) -> StateId {
        self.terminal
    }

    pub fn initial(&self) -> StateId {
        self.model.initial()
    }

    /// `S̄*` in SSP indexing.
    pub fn bad(&self) -> &StateSet {
        &self.bad
    }

    pub fn is_bad(&self, s: StateId) -> bool {
        self.bad.contains(s)
    }

    /// One-step cost `g(s, u)`; independent of the action.
    pub fn cost(&self, s: StateId) -> f64 {
        if self.bad.contains(s) {
            1.0
        } else {
            0.0
        }
    }

    /// Product state behind an SSP state (`None` for the terminal).
    pub fn origin(&self, s: StateId) -> Option<StateId> {
        self.origin[s]
    }

    /// SSP state of a product state (`None` for goal states).
    pub fn ssp_state(&self, product_state: StateId) -> Option<StateId> {
        self.index[product_state]
    }

    /// Same structure with a different transition model of equal shape.
    pub fn with_model(&self, model: LabeledModel) -> SspModel {
        assert_eq!(model.num_states(), self.model.num_states());
        SspModel { model, ..self.clone() }
    }
}

/// Converts maximal reachability of `goal` on `p` into an SSP.
///
/// Mass into `goal` is redirected to the terminal (summed in MDP mode, maxed
/// in NTS mode); states in `bad` restart at the initial state with cost one
/// under every action; the terminal is absorbing under every action.
pub fn mrp_to_ssp(p: &ProductModel, goal: &StateSet, bad: &StateSet) -> Result<SspModel, SynthesisError> {
    let pm = p.model();
    if goal.contains(pm.initial()) {
        return Err(SynthesisError::TrivialInitial);
    }
    let n = pm.num_states();
    let mut index = alloc::vec![None; n];
    let mut origin = Vec::new();
    for s in 0..n {
        if !goal.contains(s) {
            index[s] = Some(origin.len());
            origin.push(Some(s));
        }
    }
    let terminal = origin.len();
    origin.push(None);
    let total = origin.len();
    let initial = index[pm.initial()].expect("initial is not a goal state");

    let mut b = ModelBuilder::new(pm.mode(), total);
    b.props(pm.props().iter().cloned());
    for a in pm.actions() {
        b.action(a);
    }
    b.initial(initial);
    let mut bad_ssp = StateSet::empty(total);
    for (x, o) in origin.iter().enumerate() {
        let Some(s) = *o else { continue };
        b.state_name(x, String::from(pm.state_name(s)));
        b.label(x, pm.label(s));
        if bad.contains(s) {
            bad_ssp.insert(x);
            for u in pm.enabled(s) {
                b.transition(x, u, initial, 1.0);
            }
            continue;
        }
        for c in pm.choices(s) {
            b.enable(x, c.action);
            let mut into_goal = 0.0f64;
            for &(t, w) in &c.successors {
                match index[t] {
                    Some(y) => {
                        b.transition(x, c.action, y, w);
                    }
                    None => match pm.mode() {
                        Mode::Mdp => into_goal += w,
                        Mode::Nts => into_goal = into_goal.max(w),
                    },
                }
            }
            if into_goal > 0.0 {
                b.transition(x, c.action, terminal, into_goal);
            }
        }
    }
    b.state_name(terminal, "s*");
    for u in 0..pm.actions().len() {
        b.transition(terminal, u, terminal, 1.0);
    }
    Ok(SspModel {
        model: b.build()?,
        terminal,
        bad: bad_ssp,
        origin,
        index,
    })
}
