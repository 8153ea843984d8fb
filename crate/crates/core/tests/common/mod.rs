//! Random instance generators and brute-force oracles shared by the
//! integration tests. Nothing here calls into the algorithms under test
//! beyond the model constructors.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlac_core::model::{nts_from_mdp, RabinAutomaton, RabinBuilder};
use tlac_core::synthesis::{amecs, build_product, goal_and_bad_sets, mrp_to_ssp};
use tlac_core::{ActionId, LabelTiming, LabeledModel, Mode, ModelBuilder, ProductModel, SspModel, StateId, StateSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random MDP with `2..=max_states` states and up to `max_actions`
/// actions; every state enables a nonempty action subset, each with one to
/// three successors and random weights. States are labeled with random
/// subsets of `props`.
pub fn random_mdp(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize, props: &[&str]) -> LabeledModel {
    let n = rng.gen_range(2..=max_states);
    let k = rng.gen_range(1..=max_actions);
    let mut b = ModelBuilder::new(Mode::Mdp, n);
    b.props(props.iter().copied());
    let acts: Vec<ActionId> = (0..k).map(|i| b.action(&format!("a{i}"))).collect();
    for s in 0..n {
        let mut enabled: Vec<ActionId> = acts.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        if enabled.is_empty() {
            enabled.push(*acts.choose(rng).unwrap());
        }
        for u in enabled {
            let m = rng.gen_range(1..=3usize.min(n));
            let mut targets: Vec<StateId> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(m);
            let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for (t, w) in targets.into_iter().zip(weights) {
                b.transition(s, u, t, w / total);
            }
        }
        b.label(s, rng.gen_range(0..(1u32 << props.len())));
    }
    b.build().expect("generated model is valid")
}

pub fn random_nts(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize, props: &[&str]) -> LabeledModel {
    nts_from_mdp(&random_mdp(rng, max_states, max_actions, props))
}

/// Random total DRA over `props` with one or two pairs.
pub fn random_dra(rng: &mut ChaCha8Rng, states: usize, props: &[&str]) -> RabinAutomaton {
    let mut b = RabinBuilder::new(states, props.iter().copied());
    for s in 0..states {
        for l in 0..(1u32 << props.len()) {
            b.edge(s, l, rng.gen_range(0..states));
        }
    }
    for _ in 0..rng.gen_range(1..=2) {
        let avoid: Vec<StateId> = (0..states).filter(|_| rng.gen_bool(0.3)).collect();
        let mut accept: Vec<StateId> = (0..states)
            .filter(|s| !avoid.contains(s) && rng.gen_bool(0.5))
            .collect();
        if accept.is_empty() {
            accept.push(rng.gen_range(0..states));
        }
        b.pair(avoid, accept);
    }
    b.build().expect("generated automaton is total")
}

/// DRA for "eventually p" over a single proposition.
pub fn eventually(prop: &str) -> RabinAutomaton {
    let mut b = RabinBuilder::new(2, [prop]);
    b.edge(0, 1, 1).default_edge(0, 0).default_edge(1, 1);
    b.pair(vec![], vec![1]);
    b.build().unwrap()
}

/// Adjacency lists of the support graph.
pub fn support(m: &LabeledModel) -> Vec<Vec<usize>> {
    (0..m.num_states())
        .map(|s| {
            let mut v: Vec<usize> = m
                .choices(s)
                .iter()
                .flat_map(|c| c.successors.iter().map(|&(t, _)| t))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

/// Reflexive-transitive closure by repeated boolean matrix squaring.
pub fn closure(adj: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in adj.iter().enumerate() {
        r[i][i] = true;
        for &j in row {
            r[i][j] = true;
        }
    }
    let mut len = 1;
    while len < n {
        let mut sq = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        sq[i][j] |= r[k][j];
                    }
                }
            }
        }
        r = sq;
        len *= 2;
    }
    r
}

/// All-pairs shortest path lengths (Floyd–Warshall), `None` if unreachable.
pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        for &j in &adj[i] {
            if i != j {
                d[i][j] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// End component candidate: sorted states and, per state, the retained
/// actions in enabled order.
pub type Candidate = (Vec<StateId>, Vec<Vec<ActionId>>);

/// Maximal end components among states in `allowed`, by enumerating every
/// state subset. A subset is an end component exactly when each member keeps
/// an action that stays inside and the kept actions make it strongly
/// connected; the kept actions of a subset are all actions staying inside.
pub fn brute_force_mecs(m: &LabeledModel, allowed: &[bool]) -> Vec<Candidate> {
    let n = m.num_states();
    assert!(n <= 20, "subset enumeration is exponential");
    let mut ecs: Vec<(u32, Candidate)> = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let inside = |s: usize| mask & (1 << s) != 0;
        if (0..n).any(|s| inside(s) && !allowed[s]) {
            continue;
        }
        let states: Vec<StateId> = (0..n).filter(|&s| inside(s)).collect();
        let kept: Vec<Vec<ActionId>> = states
            .iter()
            .map(|&s| {
                m.choices(s)
                    .iter()
                    .filter(|c| c.successors.iter().all(|&(t, _)| inside(t)))
                    .map(|c| c.action)
                    .collect()
            })
            .collect();
        if kept.iter().any(Vec::is_empty) {
            continue;
        }
        let local = |s: StateId| states.iter().position(|&x| x == s).unwrap();
        let adj: Vec<Vec<usize>> = states
            .iter()
            .zip(&kept)
            .map(|(&s, acts)| {
                acts.iter()
                    .flat_map(|&u| m.successors(s, u).unwrap().iter().map(|&(t, _)| local(t)))
                    .collect()
            })
            .collect();
        let c = closure(&adj);
        if c.iter().all(|row| row.iter().all(|&x| x)) {
            ecs.push((mask, (states, kept)));
        }
    }
    let masks: Vec<u32> = ecs.iter().map(|e| e.0).collect();
    ecs.into_iter()
        .filter(|(mask, _)| !masks.iter().any(|&o| o != *mask && o & mask == *mask))
        .map(|(_, c)| c)
        .collect()
}

/// States from which no path reaches `goal`.
pub fn cannot_reach(m: &LabeledModel, goal: &StateSet) -> StateSet {
    let c = closure(&support(m));
    let n = m.num_states();
    StateSet::from_mask((0..n).map(|s| !goal.iter().any(|g| c[s][g])).collect())
}

/// A product with a nonempty goal set that does not contain the initial
/// state, together with its goal and bad sets and its SSP.
pub struct Instance {
    pub model: LabeledModel,
    pub product: ProductModel,
    pub goal: StateSet,
    pub bad: StateSet,
    pub ssp: SspModel,
}

/// Draws random models and automata until the product is non-trivial.
pub fn random_instance(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize, mode: Mode) -> Instance {
    loop {
        let props = ["p"];
        let model = match mode {
            Mode::Mdp => random_mdp(rng, max_states, max_actions, &props),
            Mode::Nts => random_nts(rng, max_states, max_actions, &props),
        };
        let dra = if rng.gen_bool(0.5) {
            eventually("p")
        } else {
            random_dra(rng, 2, &props)
        };
        let product = build_product(&model, &dra, LabelTiming::NextState).unwrap();
        let found = amecs(&product);
        let (goal, bad) = goal_and_bad_sets(product.model(), &found);
        let init = product.model().initial();
        if goal.is_empty() || goal.contains(init) || bad.contains(init) {
            continue;
        }
        let ssp = mrp_to_ssp(&product, &goal, &bad).unwrap();
        return Instance {
            model,
            product,
            goal,
            bad,
            ssp,
        };
    }
}
