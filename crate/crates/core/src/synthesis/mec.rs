use alloc::vec::Vec;

use super::ProductModel;
use crate::graph;
use crate::model::{ActionId, LabeledModel, StateId, StateSet, StationaryPolicy};

/// A set of states together with, per state, the actions kept inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndComponent {
    /// Sorted state ids.
    pub states: Vec<StateId>,
    /// `retained[i]` are the actions kept at `states[i]`, in enabled order.
    pub retained: Vec<Vec<ActionId>>,
}

impl EndComponent {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn retained_at(&self, s: StateId) -> Option<&[ActionId]> {
        self.states.binary_search(&s).ok().map(|i| self.retained[i].as_slice())
    }
}

/// Accepting maximal end component for Rabin pair `pair`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Amec {
    pub pair: usize,
    pub component: EndComponent,
}

/// Maximal end components of the sub-model induced by `allowed`.
///
/// Iterative refinement: drop actions that can leave their SCC, drop states
/// left without actions, recompute SCCs, until nothing changes.
fn mecs_within(m: &LabeledModel, allowed: &[bool]) -> Vec<EndComponent> {
    let n = m.num_states();
    let mut alive: Vec<bool> = allowed.to_vec();
    // kept[s][k]: choice k of state s is still retained.
    let mut kept: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            m.choices(s)
                .iter()
                .map(|c| alive[s] && c.successors.iter().all(|&(t, _)| alive[t]))
                .collect()
        })
        .collect();

    loop {
        let mut changed = false;
        // States without retained actions cannot be part of an end component;
        // removing one invalidates actions leading into it.
        loop {
            let mut removed = false;
            for s in 0..n {
                if alive[s] && !kept[s].iter().any(|&k| k) {
                    alive[s] = false;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
            changed = true;
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                for (k, c) in m.choices(s).iter().enumerate() {
                    if kept[s][k] && c.successors.iter().any(|&(t, _)| !alive[t]) {
                        kept[s][k] = false;
                    }
                }
            }
        }

        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let mut succ: Vec<usize> = Vec::new();
                if alive[s] {
                    for (k, c) in m.choices(s).iter().enumerate() {
                        if kept[s][k] {
                            succ.extend(c.successors.iter().map(|&(t, _)| t));
                        }
                    }
                }
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect();
        let (comp, _) = graph::scc(&adj, &alive);

        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (k, c) in m.choices(s).iter().enumerate() {
                if kept[s][k] && c.successors.iter().any(|&(t, _)| comp[t] != comp[s]) {
                    kept[s][k] = false;
                    changed = true;
                }
            }
        }

        if !changed {
            let mut groups: Vec<(usize, EndComponent)> = Vec::new();
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                let retained: Vec<ActionId> = m
                    .choices(s)
                    .iter()
                    .zip(&kept[s])
                    .filter_map(|(c, &k)| k.then_some(c.action))
                    .collect();
                match groups.iter_mut().find(|(c, _)| *c == comp[s]) {
                    Some((_, ec)) => {
                        ec.states.push(s);
                        ec.retained.push(retained);
                    }
                    None => groups.push((
                        comp[s],
                        EndComponent {
                            states: alloc::vec![s],
                            retained: alloc::vec![retained],
                        },
                    )),
                }
            }
            return groups.into_iter().map(|(_, ec)| ec).collect();
        }
    }
}

/// All maximal end components of `n`, ordered by their smallest state.
///
/// Only the support of the transition weights is used, so MDP and NTS
/// inputs with the same support give the same answer.
pub fn max_end_components(n: &LabeledModel) -> Vec<EndComponent> {
    mecs_within(n, &alloc::vec![true; n.num_states()])
}

/// Accepting maximal end components, for every Rabin pair: MECs of the model
/// with `L_P(i)` removed that intersect `K_P(i)`.
pub fn amecs(p: &ProductModel) -> Vec<Amec> {
    let m = p.model();
    let mut out = Vec::new();
    for (i, pair) in p.pairs().iter().enumerate() {
        let allowed: Vec<bool> = (0..m.num_states()).map(|s| !pair.avoid.contains(s)).collect();
        for ec in mecs_within(m, &allowed) {
            if ec.states.iter().any(|&s| pair.accept.contains(s)) {
                out.push(Amec { pair: i, component: ec });
            }
        }
    }
    out
}

/// `S*` (union of AMEC states) and `S̄*` (states with no possible path to
/// `S*` under any policy).
pub fn goal_and_bad_sets(m: &LabeledModel, amecs: &[Amec]) -> (StateSet, StateSet) {
    let n = m.num_states();
    let mut goal = StateSet::empty(n);
    for a in amecs {
        for &s in &a.component.states {
            goal.insert(s);
        }
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|s| m.post(s).collect()).collect();
    let dist = graph::bfs_distances(&graph::reverse(&adj), goal.iter());
    let bad = StateSet::from_mask(dist.iter().map(Option::is_none).collect());
    (goal, bad)
}

/// Uniform choice among the retained actions at each state of the AMEC;
/// rows outside the component are left undefined.
pub fn inside_amec_policy(m: &LabeledModel, a: &Amec) -> StationaryPolicy {
    let mut table = alloc::vec![Vec::new(); m.num_states()];
    for (s, acts) in a.component.states.iter().zip(&a.component.retained) {
        let p = 1.0 / acts.len() as f64;
        table[*s] = acts.iter().map(|&u| (u, p)).collect();
    }
    StationaryPolicy::new(m, table).expect("retained actions are enabled and rows are uniform")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, ModelBuilder};
    use alloc::vec;

    #[test]
    fn absorbing_state_is_a_mec() {
        let mut b = ModelBuilder::new(Mode::Nts, 1);
        let a = b.action("a");
        b.transition(0, a, 0, 1.0);
        let m = b.build().unwrap();
        let mecs = max_end_components(&m);
        assert_eq!(
            mecs,
            vec![EndComponent {
                states: vec![0],
                retained: vec![vec![a]]
            }]
        );
    }

    #[test]
    fn two_cycle_is_one_mec() {
        let mut b = ModelBuilder::new(Mode::Nts, 2);
        let a = b.action("a");
        b.transition(0, a, 1, 1.0).transition(1, a, 0, 1.0);
        let m = b.build().unwrap();
        let mecs = max_end_components(&m);
        assert_eq!(mecs.len(), 1);
        assert_eq!(mecs[0].states, vec![0, 1]);
    }

    #[test]
    fn leaking_action_is_dropped() {
        // 0 <-> 1 via a; 1 --b--> {1, 2}; 2 absorbing.
        let mut b = ModelBuilder::new(Mode::Nts, 3);
        let a = b.action("a");
        let bb = b.action("b");
        b.transition(0, a, 1, 1.0).transition(1, a, 0, 1.0);
        b.transition(1, bb, 1, 1.0).transition(1, bb, 2, 1.0);
        b.transition(2, a, 2, 1.0);
        let m = b.build().unwrap();
        let mecs = max_end_components(&m);
        assert_eq!(mecs.len(), 2);
        assert_eq!(mecs[0].states, vec![0, 1]);
        assert_eq!(mecs[0].retained_at(1), Some(&[a][..]));
        assert_eq!(mecs[1].states, vec![2]);
    }

    #[test]
    fn uniform_policy_inside_component() {
        let mut b = ModelBuilder::new(Mode::Nts, 2);
        let a = b.action("a");
        let c = b.action("c");
        b.transition(0, a, 1, 1.0).transition(0, c, 0, 1.0);
        b.transition(1, a, 0, 1.0);
        let m = b.build().unwrap();
        let amec = Amec {
            pair: 0,
            component: max_end_components(&m).remove(0),
        };
        let pol = inside_amec_policy(&m, &amec);
        assert_eq!(pol.distribution(0), &[(a, 0.5), (c, 0.5)]);
        assert_eq!(pol.distribution(1), &[(a, 1.0)]);
    }
}
