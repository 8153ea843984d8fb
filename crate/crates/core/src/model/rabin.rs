use alloc::string::String;
use alloc::vec::Vec;

use super::{Letter, StateId, MAX_PROPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RabinError {
    #[error("automaton has no states")]
    NoStates,
    #[error("state {0} is out of range")]
    DanglingState(StateId),
    #[error("{0} propositions given; at most 16 are supported")]
    TooManyProps(usize),
    #[error("letter {0:#b} uses undeclared propositions")]
    InvalidLetter(Letter),
    #[error("no transition from state {state} on letter {letter:#b} and no default")]
    MissingTransition { state: StateId, letter: Letter },
    #[error("automaton has no accepting pair")]
    NoPairs,
}

/// One Rabin acceptance pair: visit `avoid` (L) finitely often and
/// `accept` (K) infinitely often.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RabinPair {
    pub avoid: Vec<StateId>,
    pub accept: Vec<StateId>,
}

/// Deterministic Rabin automaton over the alphabet `2^Π`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RabinAutomaton {
    num_states: usize,
    initial: StateId,
    props: Vec<String>,
    delta: Vec<u32>,
    pairs: Vec<RabinPair>,
}

impl RabinAutomaton {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn num_letters(&self) -> usize {
        1 << self.props.len()
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    #[inline]
    pub fn step(&self, state: StateId, letter: Letter) -> StateId {
        debug_assert!((letter as usize) < self.num_letters());
        self.delta[(state << self.props.len()) | letter as usize] as StateId
    }

    /// Whether the lasso word `prefix · cycle^ω` is accepted.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
        let mut s = self.initial;
        for &l in prefix {
            s = self.step(s, l);
        }
        // Iterate whole cycles until the state at the cycle start repeats.
        let mut seen: Vec<StateId> = Vec::new();
        while !seen.contains(&s) {
            seen.push(s);
            for &l in cycle {
                s = self.step(s, l);
            }
        }
        let mut inf = alloc::vec![false; self.num_states];
        let start = s;
        loop {
            for &l in cycle {
                inf[s] = true;
                s = self.step(s, l);
            }
            if s == start {
                break;
            }
        }
        self.pairs
            .iter()
            .any(|p| p.avoid.iter().all(|&q| !inf[q]) && p.accept.iter().any(|&q| inf[q]))
    }
}

/// Transition function lookup `δ(s, letter)`.
pub fn dra_step(r: &RabinAutomaton, s: StateId, letter: Letter) -> StateId {
    r.step(s, letter)
}

/// Builder that expands per-state defaults into a total transition table.
#[derive(Clone, Debug)]
pub struct RabinBuilder {
    num_states: usize,
    initial: StateId,
    props: Vec<String>,
    explicit: Vec<(StateId, Letter, StateId)>,
    defaults: Vec<Option<StateId>>,
    pairs: Vec<RabinPair>,
}

impl RabinBuilder {
    pub fn new<S: Into<String>>(num_states: usize, props: impl IntoIterator<Item = S>) -> Self {
        RabinBuilder {
            num_states,
            initial: 0,
            props: props.into_iter().map(Into::into).collect(),
            explicit: Vec::new(),
            defaults: alloc::vec![None; num_states],
            pairs: Vec::new(),
        }
    }

    pub fn initial(&mut self, s: StateId) -> &mut Self {
        self.initial = s;
        self
    }

    pub fn edge(&mut self, from: StateId, letter: Letter, to: StateId) -> &mut Self {
        self.explicit.push((from, letter, to));
        self
    }

    /// Target for every letter of `from` without an explicit edge.
    pub fn default_edge(&mut self, from: StateId, to: StateId) -> &mut Self {
        if let Some(slot) = self.defaults.get_mut(from) {
            *slot = Some(to);
        } else {
            self.explicit.push((from, 0, to));
        }
        self
    }

    pub fn pair(&mut self, avoid: Vec<StateId>, accept: Vec<StateId>) -> &mut Self {
        self.pairs.push(RabinPair { avoid, accept });
        self
    }

    pub fn build(self) -> Result<RabinAutomaton, RabinError> {
        let n = self.num_states;
        if n == 0 {
            return Err(RabinError::NoStates);
        }
        if self.props.len() > MAX_PROPS {
            return Err(RabinError::TooManyProps(self.props.len()));
        }
        let check = |s: StateId| {
            if s < n {
                Ok(())
            } else {
                Err(RabinError::DanglingState(s))
            }
        };
        check(self.initial)?;
        let bits = self.props.len();
        let letters = 1usize << bits;
        let mut delta = alloc::vec![u32::MAX; n << bits];
        for &(from, letter, to) in &self.explicit {
            check(from)?;
            check(to)?;
            if letter as usize >= letters {
                return Err(RabinError::InvalidLetter(letter));
            }
            delta[(from << bits) | letter as usize] = to as u32;
        }
        for (from, default) in self.defaults.iter().enumerate() {
            for letter in 0..letters {
                let slot = &mut delta[(from << bits) | letter];
                if *slot == u32::MAX {
                    match default {
                        Some(to) => {
                            check(*to)?;
                            *slot = *to as u32;
                        }
                        None => {
                            return Err(RabinError::MissingTransition {
                                state: from,
                                letter: letter as Letter,
                            })
                        }
                    }
                }
            }
        }
        if self.pairs.is_empty() {
            return Err(RabinError::NoPairs);
        }
        let mut pairs = self.pairs;
        for p in &mut pairs {
            for &s in p.avoid.iter().chain(p.accept.iter()) {
                check(s)?;
            }
            p.avoid.sort_unstable();
            p.avoid.dedup();
            p.accept.sort_unstable();
            p.accept.dedup();
        }
        Ok(RabinAutomaton {
            num_states: n,
            initial: self.initial,
            props: self.props,
            delta,
            pairs,
        })
    }
}
