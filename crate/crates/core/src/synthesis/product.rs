use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::SynthesisError;
use crate::model::{LabeledModel, Letter, ModelBuilder, RabinAutomaton, StateId, StateSet};

/// Which model label drives the automaton on a step `q --u--> q'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelTiming {
    /// `s' = δ(s, h(q'))`; the initial automaton state reads `h(q0)`.
    #[default]
    NextState,
    /// `s' = δ(s, h(q))`; the initial automaton state is `s0`.
    CurrentState,
}

/// Rabin pair lifted to product states: `Q × L(i)` and `Q × K(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductPair {
    pub avoid: StateSet,
    pub accept: StateSet,
}

/// Synchronized product of a labeled model with a Rabin automaton,
/// restricted to states reachable from the initial product state.
#[derive(Clone, Debug)]
pub struct ProductModel {
    model: LabeledModel,
    pairs: Vec<ProductPair>,
    projection: Vec<(StateId, StateId)>,
    index: Vec<Option<StateId>>,
    dra: RabinAutomaton,
    base_letters: Vec<Letter>,
    timing: LabelTiming,
    unpruned: usize,
}

impl ProductModel {
    pub fn model(&self) -> &LabeledModel {
        &self.model
    }

    pub fn pairs(&self) -> &[ProductPair] {
        &self.pairs
    }

    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    /// `|Q| × |S|`, the size before dropping unreachable states.
    pub fn unpruned_states(&self) -> usize {
        self.unpruned
    }

    /// The (model state, automaton state) pair of a product state.
    pub fn projection(&self, p: StateId) -> (StateId, StateId) {
        self.projection[p]
    }

    /// Product id of `(q, s)` if it is reachable.
    pub fn state_of(&self, q: StateId, s: StateId) -> Option<StateId> {
        self.index[q * self.dra.num_states() + s]
    }

    pub fn automaton(&self) -> &RabinAutomaton {
        &self.dra
    }

    pub fn timing(&self) -> LabelTiming {
        self.timing
    }

    /// Product successor of `p` when the model moves to `q_next`.
    pub fn lift(&self, p: StateId, q_next: StateId) -> Option<StateId> {
        let (q, s) = self.projection[p];
        let letter = match self.timing {
            LabelTiming::NextState => self.base_letters[q_next],
            LabelTiming::CurrentState => self.base_letters[q],
        };
        self.state_of(q_next, self.dra.step(s, letter))
    }

    /// Same structure with a different transition model (e.g. the NTS
    /// abstraction of this product).
    pub fn with_model(&self, model: LabeledModel) -> ProductModel {
        assert_eq!(model.num_states(), self.model.num_states());
        ProductModel { model, ..self.clone() }
    }
}

fn letter_names(props: &[String]) -> String {
    let mut s = String::new();
    for (i, p) in props.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(p);
    }
    s
}

/// Builds `m × r`. Transition weights are copied from `m`, so the product
/// has the same mode as the model.
pub fn build_product(
    m: &LabeledModel,
    r: &RabinAutomaton,
    timing: LabelTiming,
) -> Result<ProductModel, SynthesisError> {
    // Map model proposition bits onto automaton proposition bits.
    let mismatch = || SynthesisError::PropositionMismatch {
        model: letter_names(m.props()),
        automaton: letter_names(r.props()),
    };
    if m.props().len() != r.props().len() {
        return Err(mismatch());
    }
    let mut bit_map = Vec::with_capacity(m.props().len());
    for p in m.props() {
        let j = r.props().iter().position(|x| x == p).ok_or_else(mismatch)?;
        bit_map.push(j);
    }
    let base_letters: Vec<Letter> = m
        .labels()
        .iter()
        .map(|&l| {
            bit_map
                .iter()
                .enumerate()
                .filter(|&(i, _)| l & (1 << i) != 0)
                .fold(0, |acc, (_, &j)| acc | (1 << j))
        })
        .collect();

    let ns = r.num_states();
    let mut index: Vec<Option<StateId>> = alloc::vec![None; m.num_states() * ns];
    let mut projection: Vec<(StateId, StateId)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut visit =
        |q: StateId, s: StateId, projection: &mut Vec<(StateId, StateId)>, queue: &mut VecDeque<StateId>| {
            let slot = &mut index[q * ns + s];
            match *slot {
                Some(p) => p,
                None => {
                    let p = projection.len();
                    *slot = Some(p);
                    projection.push((q, s));
                    queue.push_back(p);
                    p
                }
            }
        };

    let q0 = m.initial();
    let s0 = match timing {
        LabelTiming::NextState => r.step(r.initial(), base_letters[q0]),
        LabelTiming::CurrentState => r.initial(),
    };
    visit(q0, s0, &mut projection, &mut queue);

    // (product state, action, successor, weight), emitted in BFS order.
    let mut edges: Vec<(StateId, usize, StateId, f64)> = Vec::new();
    while let Some(p) = queue.pop_front() {
        let (q, s) = projection[p];
        for choice in m.choices(q) {
            for &(q2, w) in &choice.successors {
                let letter = match timing {
                    LabelTiming::NextState => base_letters[q2],
                    LabelTiming::CurrentState => base_letters[q],
                };
                let s2 = r.step(s, letter);
                let p2 = visit(q2, s2, &mut projection, &mut queue);
                edges.push((p, choice.action, p2, w));
            }
        }
    }

    let n = projection.len();
    let mut b = ModelBuilder::new(m.mode(), n);
    b.props(m.props().iter().cloned());
    for a in m.actions() {
        b.action(a);
    }
    for (p, &(q, s)) in projection.iter().enumerate() {
        b.state_name(p, format!("({},{})", m.state_name(q), s));
        b.label(p, m.label(q));
        for a in m.enabled(q) {
            b.enable(p, a);
        }
    }
    for (p, a, p2, w) in edges {
        b.transition(p, a, p2, w);
    }
    b.initial(0);
    let model = b.build()?;

    let pairs = r
        .pairs()
        .iter()
        .map(|pair| {
            let mut avoid = StateSet::empty(n);
            let mut accept = StateSet::empty(n);
            for (p, &(_, s)) in projection.iter().enumerate() {
                if pair.avoid.binary_search(&s).is_ok() {
                    avoid.insert(p);
                }
                if pair.accept.binary_search(&s).is_ok() {
                    accept.insert(p);
                }
            }
            ProductPair { avoid, accept }
        })
        .collect();

    Ok(ProductModel {
        model,
        pairs,
        projection,
        index,
        dra: r.clone(),
        base_letters,
        timing,
        unpruned: m.num_states() * ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, RabinBuilder, STOCHASTIC_TOL};
    use alloc::vec;

    /// 0 --a--> 1 (absorbing), p labels state 1.
    fn chain() -> LabeledModel {
        let mut b = ModelBuilder::new(Mode::Mdp, 2);
        b.props(["p"]);
        let a = b.action("a");
        b.transition(0, a, 1, 1.0).transition(1, a, 1, 1.0);
        b.label(1, 1);
        b.build().unwrap()
    }

    fn eventually_p() -> RabinAutomaton {
        let mut b = RabinBuilder::new(2, ["p"]);
        b.edge(0, 1, 1).default_edge(0, 0).default_edge(1, 1);
        b.pair(vec![], vec![1]);
        b.build().unwrap()
    }

    #[test]
    fn chain_times_eventually() {
        let p = build_product(&chain(), &eventually_p(), LabelTiming::NextState).unwrap();
        assert_eq!(p.unpruned_states(), 4);
        // (0,0) is the initial state and moves to (1,1).
        assert_eq!(p.projection(0), (0, 0));
        let succ = p.model().successors(0, 0).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(p.projection(succ[0].0), (1, 1));
        assert_eq!(p.num_states(), 2);
        assert!(p.pairs()[0].accept.contains(succ[0].0));
        assert_eq!(p.lift(0, 1), Some(succ[0].0));
    }

    #[test]
    fn unit_automaton_gives_isomorphic_product() {
        let mut rb = RabinBuilder::new(1, ["p"]);
        rb.default_edge(0, 0).pair(vec![], vec![0]);
        let r = rb.build().unwrap();
        let m = chain();
        let p = build_product(&m, &r, LabelTiming::NextState).unwrap();
        assert_eq!(p.num_states(), m.num_states());
        for ps in 0..p.num_states() {
            let (q, _) = p.projection(ps);
            for c in p.model().choices(ps) {
                let base = m.successors(q, c.action).unwrap();
                let lifted: Vec<_> = c.successors.iter().map(|&(t, w)| (p.projection(t).0, w)).collect();
                assert_eq!(lifted, base);
            }
        }
    }

    #[test]
    fn proposition_mismatch() {
        let mut rb = RabinBuilder::new(1, ["x"]);
        rb.default_edge(0, 0).pair(vec![], vec![0]);
        let r = rb.build().unwrap();
        assert!(matches!(
            build_product(&chain(), &r, LabelTiming::NextState),
            Err(SynthesisError::PropositionMismatch { .. })
        ));
    }

    #[test]
    fn product_rows_stay_stochastic() {
        let p = build_product(&chain(), &eventually_p(), LabelTiming::CurrentState).unwrap();
        for s in 0..p.num_states() {
            for c in p.model().choices(s) {
                let sum: f64 = c.successors.iter().map(|&(_, w)| w).sum();
                assert!((sum - 1.0).abs() <= STOCHASTIC_TOL);
            }
        }
    }
}
