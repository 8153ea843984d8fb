//! The t-step lookahead randomized stationary policy.
//!
//! A state's policy is a softmax over the action sequences of length `t`
//! that are possible from it, scored by two features (neighborhood safety
//! and progress towards the goal), and marginalized onto the first action.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph;
use crate::model::{ActionId, LabeledModel, StateId, StateSet, StationaryPolicy};
use crate::synthesis::SspModel;

/// Policy parameters `[θ1, θ2]`.
pub type Theta = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RspError {
    #[error("lookahead horizon must be at least 1")]
    ZeroHorizon,
    #[error("neighborhood radius must be at least 1")]
    ZeroRadius,
    #[error("state {state} has more than {limit} action sequences")]
    TooManySequences { state: StateId, limit: usize },
    #[error("action {action} has zero probability at state {state}")]
    ZeroProbability { state: StateId, action: ActionId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RspConfig {
    /// Lookahead depth `t`.
    pub horizon: usize,
    /// Neighborhood radius `r_N`; `None` uses the horizon.
    pub radius: Option<usize>,
    /// Progress stand-in for states that cannot reach the goal; `None` uses
    /// the number of states.
    pub unreachable_progress: Option<f64>,
    /// Upper bound on `|E(i)|` for any state.
    pub sequence_cap: usize,
}

impl Default for RspConfig {
    fn default() -> Self {
        RspConfig {
            horizon: 2,
            radius: None,
            unreachable_progress: None,
            sequence_cap: 10_000,
        }
    }
}

/// One action sequence from a state, with the states it can end in and its
/// feature pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub actions: Vec<ActionId>,
    /// Sorted states reachable from the root by following `actions`.
    pub reach: Vec<StateId>,
    pub features: [f64; 2],
}

impl Sequence {
    pub fn first(&self) -> ActionId {
        self.actions[0]
    }

    pub fn log_score(&self, theta: &Theta) -> f64 {
        theta[0] * self.features[0] + theta[1] * self.features[1]
    }
}

/// Minimum number of possibilistic steps from each state to `targets`;
/// `None` when no path exists.
pub fn min_distances(n: &LabeledModel, targets: &StateSet) -> Vec<Option<usize>> {
    distances_to(n, targets, &StateSet::empty(n.num_states()))
}

/// As [`min_distances`], but paths may not leave a `blocked` state.
fn distances_to(n: &LabeledModel, targets: &StateSet, blocked: &StateSet) -> Vec<Option<usize>> {
    let adj: Vec<Vec<usize>> = (0..n.num_states())
        .map(|s| {
            if blocked.contains(s) {
                Vec::new()
            } else {
                n.post(s).collect()
            }
        })
        .collect();
    graph::bfs_distances(&graph::reverse(&adj), targets.iter())
}

/// States within forward distance `radius` of `i`, including `i`; sorted.
pub fn neighborhood(n: &LabeledModel, i: StateId, radius: usize) -> Vec<StateId> {
    let mut dist = alloc::vec![usize::MAX; n.num_states()];
    dist[i] = 0;
    let mut queue = VecDeque::from([i]);
    let mut out = alloc::vec![i];
    while let Some(s) = queue.pop_front() {
        if dist[s] == radius {
            continue;
        }
        for t in n.post(s) {
            if dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                out.push(t);
                queue.push_back(t);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Fraction of the neighborhood of `i` outside `bad`.
pub fn safety_score(n: &LabeledModel, i: StateId, radius: usize, bad: &StateSet) -> f64 {
    let hood = neighborhood(n, i, radius);
    let good = hood.iter().filter(|&&j| !bad.contains(j)).count();
    good as f64 / hood.len() as f64
}

/// An action sequence with the sorted set of states it can end in.
pub type SequenceReach = (Vec<ActionId>, Vec<StateId>);

/// All action sequences of length `t` from `i` with their reach sets.
///
/// The k-th action must be enabled at some state reachable after the first
/// k−1 actions; the reach set follows only the states where it is enabled.
pub fn action_sequences(n: &LabeledModel, i: StateId, t: usize, cap: usize) -> Result<Vec<SequenceReach>, RspError> {
    if t == 0 {
        return Err(RspError::ZeroHorizon);
    }
    let mut frontier: Vec<SequenceReach> = alloc::vec![(Vec::new(), alloc::vec![i])];
    for _ in 0..t {
        let mut next = Vec::new();
        for (prefix, reach) in &frontier {
            let mut candidates: Vec<ActionId> = reach.iter().flat_map(|&s| n.enabled(s)).collect();
            candidates.sort_unstable();
            candidates.dedup();
            for u in candidates {
                let mut to: Vec<StateId> = reach
                    .iter()
                    .filter_map(|&s| n.successors(s, u))
                    .flat_map(|succ| succ.iter().map(|&(t, _)| t))
                    .collect();
                to.sort_unstable();
                to.dedup();
                let mut seq = prefix.clone();
                seq.push(u);
                next.push((seq, to));
                if next.len() > cap {
                    return Err(RspError::TooManySequences { state: i, limit: cap });
                }
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Sequence weights `μ̃(i, ·)` from log-scores, by a shifted softmax.
fn sequence_weights(seqs: &[Sequence], theta: &Theta) -> Vec<f64> {
    let logs: Vec<f64> = seqs.iter().map(|e| e.log_score(theta)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|&l| libm::exp(l - top)).collect();
    let z: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z;
    }
    w
}

/// First-action marginal of the softmax over `seqs`, sorted by action.
pub fn action_distribution(seqs: &[Sequence], theta: &Theta) -> Vec<(ActionId, f64)> {
    let w = sequence_weights(seqs, theta);
    let mut out: Vec<(ActionId, f64)> = Vec::new();
    for (e, &p) in seqs.iter().zip(&w) {
        match out.iter_mut().find(|(a, _)| *a == e.first()) {
            Some(slot) => slot.1 += p,
            None => out.push((e.first(), p)),
        }
    }
    out.sort_by_key(|&(a, _)| a);
    out
}

/// `∇θ ln μθ(i, u)`: the feature mean over sequences starting with `u`
/// minus the feature mean over all sequences, both under the softmax.
/// `None` if no sequence starts with `u`.
pub fn log_policy_gradient(seqs: &[Sequence], theta: &Theta, u: ActionId) -> Option<[f64; 2]> {
    let mean = |pick: &dyn Fn(&Sequence) -> bool| -> Option<[f64; 2]> {
        let top = seqs
            .iter()
            .filter(|e| pick(e))
            .map(|e| e.log_score(theta))
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return None;
        }
        let (mut z, mut f) = (0.0, [0.0; 2]);
        for e in seqs.iter().filter(|e| pick(e)) {
            let w = libm::exp(e.log_score(theta) - top);
            z += w;
            f[0] += w * e.features[0];
            f[1] += w * e.features[1];
        }
        Some([f[0] / z, f[1] / z])
    };
    let cond = mean(&|e| e.first() == u)?;
    let all = mean(&|_| true)?;
    Some([cond[0] - all[0], cond[1] - all[1]])
}

/// Lookahead policy tables over an SSP-converted NTS.
///
/// Everything here is independent of `θ`, which is passed to each query.
#[derive(Clone, Debug)]
pub struct LookaheadPolicy {
    horizon: usize,
    radius: usize,
    unreachable_progress: f64,
    terminal: StateId,
    safe: Vec<f64>,
    progress: Vec<Option<usize>>,
    sequences: Vec<Vec<Sequence>>,
}

impl LookaheadPolicy {
    /// Builds the tables for `ssp`. Progress is measured to the terminal,
    /// which stands for the goal set; states in `S̄*` keep no progress.
    pub fn new(ssp: &SspModel, cfg: &RspConfig) -> Result<Self, RspError> {
        if cfg.horizon == 0 {
            return Err(RspError::ZeroHorizon);
        }
        let radius = cfg.radius.unwrap_or(cfg.horizon);
        if radius == 0 {
            return Err(RspError::ZeroRadius);
        }
        let n = ssp.model();
        let ns = n.num_states();
        let terminal = ssp.terminal();
        let unreachable_progress = cfg.unreachable_progress.unwrap_or(ns as f64);
        let goal = StateSet::from_ids(ns, [terminal]);
        let progress = distances_to(n, &goal, ssp.bad());
        let safe: Vec<f64> = (0..ns).map(|i| safety_score(n, i, radius, ssp.bad())).collect();
        let prog = |j: StateId| progress[j].map_or(unreachable_progress, |d| d as f64);

        let mut sequences = Vec::with_capacity(ns);
        for i in 0..ns {
            if i == terminal {
                let u = n.choices(i)[0].action;
                sequences.push(alloc::vec![Sequence {
                    actions: alloc::vec![u],
                    reach: alloc::vec![i],
                    features: [0.0, 0.0],
                }]);
                continue;
            }
            let hood = neighborhood(n, i, radius);
            let here = prog(i);
            let seqs = action_sequences(n, i, cfg.horizon, cfg.sequence_cap)?
                .into_iter()
                .map(|(actions, reach)| {
                    let mut f = [0.0, 0.0];
                    for &j in reach.iter().filter(|j| hood.binary_search(j).is_ok()) {
                        f[0] += safe[j];
                        f[1] += prog(j) - here;
                    }
                    Sequence {
                        actions,
                        reach,
                        features: f,
                    }
                })
                .collect();
            sequences.push(seqs);
        }
        Ok(LookaheadPolicy {
            horizon: cfg.horizon,
            radius,
            unreachable_progress,
            terminal,
            safe,
            progress,
            sequences,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn num_states(&self) -> usize {
        self.sequences.len()
    }

    pub fn terminal(&self) -> StateId {
        self.terminal
    }

    pub fn safe(&self, i: StateId) -> f64 {
        self.safe[i]
    }

    /// Steps to the goal, `None` for states that cannot reach it.
    pub fn progress(&self, i: StateId) -> Option<usize> {
        self.progress[i]
    }

    /// The progress value used in features for states without a path.
    pub fn unreachable_progress(&self) -> f64 {
        self.unreachable_progress
    }

    pub fn sequences(&self, i: StateId) -> &[Sequence] {
        &self.sequences[i]
    }

    /// `a(θ, i, e)` for the k-th sequence of `i`.
    pub fn sequence_score(&self, i: StateId, k: usize, theta: &Theta) -> f64 {
        libm::exp(self.sequences[i][k].log_score(theta))
    }

    pub fn action_distribution(&self, i: StateId, theta: &Theta) -> Vec<(ActionId, f64)> {
        action_distribution(&self.sequences[i], theta)
    }

    pub fn log_policy_gradient(&self, i: StateId, u: ActionId, theta: &Theta) -> Result<[f64; 2], RspError> {
        log_policy_gradient(&self.sequences[i], theta, u).ok_or(RspError::ZeroProbability { state: i, action: u })
    }

    /// Draws an action from `μθ(i, ·)` with one uniform variate.
    pub fn sample_action<R: Rng + ?Sized>(&self, i: StateId, theta: &Theta, rng: &mut R) -> ActionId {
        let dist = self.action_distribution(i, theta);
        if dist.len() == 1 {
            return dist[0].0;
        }
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for &(u, p) in &dist {
            acc += p;
            if x < acc {
                return u;
            }
        }
        dist[dist.len() - 1].0
    }

    /// The policy as a table over the SSP states.
    pub fn to_stationary(&self, ssp: &SspModel, theta: &Theta) -> StationaryPolicy {
        let table = (0..self.num_states())
            .map(|i| self.action_distribution(i, theta))
            .collect();
        StationaryPolicy::new(ssp.model(), table).expect("softmax rows are normalized over enabled actions")
    }

    /// The policy transported to the product states behind `ssp`. Goal
    /// states, which the SSP folds into its terminal, get their first
    /// enabled action.
    pub fn on_product(&self, ssp: &SspModel, product: &LabeledModel, theta: &Theta) -> StationaryPolicy {
        let table = (0..product.num_states())
            .map(|p| match ssp.ssp_state(p) {
                Some(x) => self.action_distribution(x, theta),
                None => alloc::vec![(product.choices(p)[0].action, 1.0)],
            })
            .collect();
        StationaryPolicy::new(product, table).expect("softmax rows are normalized over enabled actions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, ModelBuilder};
    use alloc::vec;

    fn seq(actions: &[ActionId], f: [f64; 2]) -> Sequence {
        Sequence {
            actions: actions.to_vec(),
            reach: vec![],
            features: f,
        }
    }

    #[test]
    fn chain_distances() {
        let mut b = ModelBuilder::new(Mode::Nts, 4);
        let a = b.action("a");
        for s in 0..3 {
            b.transition(s, a, s + 1, 1.0);
        }
        b.transition(3, a, 3, 1.0);
        let n = b.build().unwrap();
        let d = min_distances(&n, &StateSet::from_ids(4, [3]));
        assert_eq!(d, vec![Some(3), Some(2), Some(1), Some(0)]);
    }

    #[test]
    fn isolated_state_neighborhood() {
        let mut b = ModelBuilder::new(Mode::Nts, 2);
        let a = b.action("a");
        b.transition(0, a, 0, 1.0).transition(1, a, 0, 1.0);
        let n = b.build().unwrap();
        assert_eq!(neighborhood(&n, 0, 5), vec![0]);
        assert_eq!(neighborhood(&n, 1, 5), vec![0, 1]);
    }

    #[test]
    fn quarter_bad_neighborhood() {
        // 0 -> {1, 2, 3}, 3 bad.
        let mut b = ModelBuilder::new(Mode::Nts, 4);
        let a = b.action("a");
        for t in 1..4 {
            b.transition(0, a, t, 1.0);
            b.transition(t, a, t, 1.0);
        }
        let n = b.build().unwrap();
        let s = safety_score(&n, 0, 1, &StateSet::from_ids(4, [3]));
        assert_eq!(s, 0.75);
        assert_eq!(safety_score(&n, 0, 1, &StateSet::empty(4)), 1.0);
    }

    #[test]
    fn one_step_sequences_are_enabled_actions() {
        let mut b = ModelBuilder::new(Mode::Nts, 3);
        let x = b.action("x");
        let y = b.action("y");
        b.transition(0, x, 1, 1.0)
            .transition(0, x, 2, 1.0)
            .transition(0, y, 2, 1.0);
        b.transition(1, x, 1, 1.0).transition(2, x, 2, 1.0);
        let n = b.build().unwrap();
        let e = action_sequences(&n, 0, 1, 100).unwrap();
        assert_eq!(e, vec![(vec![x], vec![1, 2]), (vec![y], vec![2])]);
        assert_eq!(
            action_sequences(&n, 0, 2, 1),
            Err(RspError::TooManySequences { state: 0, limit: 1 })
        );
    }

    #[test]
    fn zero_theta_is_uniform_over_sequences() {
        let seqs = [
            seq(&[0, 0], [1.0, 0.0]),
            seq(&[0, 1], [0.0, 2.0]),
            seq(&[1, 0], [3.0, -1.0]),
        ];
        let d = action_distribution(&seqs, &[0.0, 0.0]);
        assert!((d[0].1 - 2.0 / 3.0).abs() < 1e-15 && (d[1].1 - 1.0 / 3.0).abs() < 1e-15);
        let g = log_policy_gradient(&seqs, &[0.0, 0.0], 0).unwrap();
        let all = [4.0 / 3.0, 1.0 / 3.0];
        assert!((g[0] - (0.5 - all[0])).abs() < 1e-15);
        assert!((g[1] - (1.0 - all[1])).abs() < 1e-15);
        assert_eq!(log_policy_gradient(&seqs, &[0.0, 0.0], 7), None);
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let seqs = [seq(&[0], [1000.0, 0.0]), seq(&[1], [999.0, 0.0])];
        let d = action_distribution(&seqs, &[5.0, 0.0]);
        assert!(d.iter().all(|&(_, p)| p.is_finite()));
        assert!((d[0].1 + d[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_theta_score() {
        let s = seq(&[0], [1.0, 0.0]);
        assert_eq!(libm::exp(s.log_score(&[5.0, -0.5])), libm::exp(5.0));
    }
}
