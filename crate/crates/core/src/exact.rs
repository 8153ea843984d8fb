//! Exact dynamic-programming ground truth: maximal reachability by value
//! iteration, exact evaluation of fixed policies, the expected total cost of
//! the shortest-path formulation, and brute-force policy enumeration.

use alloc::vec::Vec;

use crate::graph;
use crate::linalg::{self, LinalgError, SparseRow};
use crate::model::{ActionId, LabeledModel, Mode, StateId, StateSet, StationaryPolicy};
use crate::synthesis::SspModel;

/// Value-iteration stopping residual.
pub const VI_TOL: f64 = 1e-12;
/// Value-iteration sweep budget.
pub const VI_MAX_SWEEPS: usize = 1_000_000;
/// Largest policy space [`enumerate_policies`] agrees to walk.
pub const MAX_ENUMERATED: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("exact evaluation needs an MDP-mode model")]
    NotMdp,
    #[error("policy is undefined at state {0}")]
    PolicyUndefined(StateId),
    #[error(
        "policy is improper: state {0} is reachable but cannot reach the terminal, so the expected total cost diverges"
    )]
    Improper(StateId),
    #[error("{0} deterministic policies exceed the enumeration limit")]
    TooManyPolicies(u64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Maximal reachability values and an optimal deterministic policy.
#[derive(Clone, Debug)]
pub struct Reachability {
    pub values: Vec<f64>,
    pub policy: StationaryPolicy,
    pub sweeps: usize,
}

impl Reachability {
    pub fn initial_value(&self, m: &LabeledModel) -> f64 {
        self.values[m.initial()]
    }
}

/// Gauss–Seidel value iteration for maximal reachability, started from
/// `v ≡ 0` outside the goal set.
pub struct ValueIteration<'a> {
    model: &'a LabeledModel,
    goal: &'a StateSet,
    bad: &'a StateSet,
    values: Vec<f64>,
}

impl<'a> ValueIteration<'a> {
    pub fn new(model: &'a LabeledModel, goal: &'a StateSet, bad: &'a StateSet) -> Self {
        let values = (0..model.num_states())
            .map(|s| if goal.contains(s) { 1.0 } else { 0.0 })
            .collect();
        ValueIteration {
            model,
            goal,
            bad,
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One in-place sweep; returns the largest change.
    pub fn sweep(&mut self) -> f64 {
        let mut residual = 0.0f64;
        for s in 0..self.model.num_states() {
            if self.goal.contains(s) || self.bad.contains(s) {
                continue;
            }
            let best = self
                .model
                .choices(s)
                .iter()
                .map(|c| expectation(&c.successors, &self.values))
                .fold(0.0f64, f64::max)
                .min(1.0);
            residual = residual.max((best - self.values[s]).abs());
            self.values[s] = best;
        }
        residual
    }

    /// Sweeps until the residual reaches `tol` or the budget runs out;
    /// returns the number of sweeps.
    pub fn run(&mut self, tol: f64, max_sweeps: usize) -> usize {
        for k in 1..=max_sweeps {
            if self.sweep() <= tol {
                return k;
            }
        }
        max_sweeps
    }
}

fn expectation(successors: &[(StateId, f64)], v: &[f64]) -> f64 {
    successors.iter().map(|&(t, w)| w * v[t]).sum()
}

/// Greedy policy from `values` that also makes progress towards the goal:
/// among value-attaining actions, the lowest-index one that can move one
/// layer closer to the goal in the graph of value-attaining actions.
fn extract_policy(m: &LabeledModel, goal: &StateSet, bad: &StateSet, values: &[f64]) -> Vec<ActionId> {
    const OPT_TOL: f64 = 1e-9;
    let n = m.num_states();
    let first = |s: StateId| m.choices(s)[0].action;
    let mut choice: Vec<Option<ActionId>> = alloc::vec![None; n];
    let mut done = alloc::vec![false; n];
    for s in 0..n {
        if goal.contains(s) || bad.contains(s) {
            choice[s] = Some(first(s));
            done[s] = goal.contains(s);
        }
    }
    let optimal = |s: StateId| {
        let best = m
            .choices(s)
            .iter()
            .map(|c| expectation(&c.successors, values))
            .fold(f64::NEG_INFINITY, f64::max);
        m.choices(s)
            .iter()
            .filter(move |c| expectation(&c.successors, values) >= best - OPT_TOL)
    };
    loop {
        let layer: Vec<(StateId, ActionId)> = (0..n)
            .filter(|&s| !done[s] && choice[s].is_none() && values[s] > 0.0)
            .filter_map(|s| {
                optimal(s)
                    .find(|c| c.successors.iter().any(|&(t, _)| done[t]))
                    .map(|c| (s, c.action))
            })
            .collect();
        if layer.is_empty() {
            break;
        }
        for (s, a) in layer {
            choice[s] = Some(a);
            done[s] = true;
        }
    }
    (0..n)
        .map(|s| choice[s].unwrap_or_else(|| optimal(s).next().map_or(first(s), |c| c.action)))
        .collect()
}

/// Maximal probability of reaching `goal`, with an optimal deterministic
/// policy. Values come from value iteration, followed by exact evaluation
/// and improvement of the extracted policy until it is stable.
pub fn max_reach(m: &LabeledModel, goal: &StateSet, bad: &StateSet) -> Result<Reachability, ExactError> {
    if m.mode() != Mode::Mdp {
        return Err(ExactError::NotMdp);
    }
    let mut vi = ValueIteration::new(m, goal, bad);
    let sweeps = vi.run(VI_TOL, VI_MAX_SWEEPS);
    let mut values = vi.values;
    let mut actions = extract_policy(m, goal, bad, &values);
    for _ in 0..100 {
        let policy = StationaryPolicy::deterministic(m, &actions).expect("extracted actions are enabled");
        let exact = eval_policy_reach(m, &policy, goal, bad)?;
        let improvable = (0..m.num_states()).any(|s| {
            !goal.contains(s)
                && !bad.contains(s)
                && m.choices(s)
                    .iter()
                    .any(|c| expectation(&c.successors, &exact) > exact[s] + VI_TOL)
        });
        values = exact;
        if !improvable {
            return Ok(Reachability { values, policy, sweeps });
        }
        actions = extract_policy(m, goal, bad, &values);
    }
    let policy = StationaryPolicy::deterministic(m, &actions).expect("extracted actions are enabled");
    Ok(Reachability { values, policy, sweeps })
}

/// Support graph of the Markov chain induced by `policy`.
fn induced_support(m: &LabeledModel, policy: &StationaryPolicy, skip: impl Fn(StateId) -> bool) -> Vec<Vec<usize>> {
    (0..m.num_states())
        .map(|s| {
            if skip(s) {
                return Vec::new();
            }
            let mut succ: Vec<usize> = policy
                .distribution(s)
                .iter()
                .filter(|&&(_, p)| p > 0.0)
                .flat_map(|&(u, _)| m.successors(s, u).unwrap_or(&[]).iter().map(|&(t, _)| t))
                .collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect()
}

/// Exact probability of reaching `goal` under `policy`, for every state.
///
/// States in `bad`, and states whose induced chain cannot reach `goal`, get
/// zero; the remaining values solve the linear fixed point.
pub fn eval_policy_reach(
    m: &LabeledModel,
    policy: &StationaryPolicy,
    goal: &StateSet,
    bad: &StateSet,
) -> Result<Vec<f64>, ExactError> {
    if m.mode() != Mode::Mdp {
        return Err(ExactError::NotMdp);
    }
    let n = m.num_states();
    let stop = |s: StateId| goal.contains(s) || bad.contains(s);
    for s in 0..n {
        if !stop(s) && !policy.is_defined(s) {
            return Err(ExactError::PolicyUndefined(s));
        }
    }
    let adj = induced_support(m, policy, stop);
    let dist = graph::bfs_distances(&graph::reverse(&adj), goal.iter());
    let mut slot = alloc::vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for s in 0..n {
        if !stop(s) && dist[s].is_some() {
            slot[s] = unknowns.len();
            unknowns.push(s);
        }
    }
    let mut rows: Vec<SparseRow> = Vec::with_capacity(unknowns.len());
    let mut rhs = Vec::with_capacity(unknowns.len());
    for &s in &unknowns {
        let mut row: SparseRow = Vec::new();
        let mut b = 0.0;
        for &(u, pu) in policy.distribution(s) {
            for &(t, w) in m.successors(s, u).unwrap_or(&[]) {
                if goal.contains(t) {
                    b += pu * w;
                } else if slot[t] != usize::MAX {
                    row.push((slot[t], pu * w));
                }
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let x = linalg::solve_identity_minus(&rows, &rhs)?;
    let mut values = alloc::vec![0.0; n];
    for s in goal.iter() {
        values[s] = 1.0;
    }
    for (i, &s) in unknowns.iter().enumerate() {
        values[s] = x[i].clamp(0.0, 1.0);
    }
    Ok(values)
}

/// Expected total cost from the initial state of `ssp` under `policy`.
pub fn expected_total_cost(ssp: &SspModel, policy: &StationaryPolicy) -> Result<f64, ExactError> {
    let m = ssp.model();
    if m.mode() != Mode::Mdp {
        return Err(ExactError::NotMdp);
    }
    let n = m.num_states();
    let terminal = ssp.terminal();
    let adj = induced_support(m, policy, |s| s == terminal);
    let reach = graph::bfs_distances(&adj, [m.initial()]);
    for s in 0..n {
        if reach[s].is_some() && s != terminal && !policy.is_defined(s) {
            return Err(ExactError::PolicyUndefined(s));
        }
    }
    let to_terminal = graph::bfs_distances(&graph::reverse(&adj), [terminal]);
    if let Some(s) = (0..n).find(|&s| reach[s].is_some() && to_terminal[s].is_none()) {
        return Err(ExactError::Improper(s));
    }
    let mut slot = alloc::vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for s in 0..n {
        if reach[s].is_some() && s != terminal {
            slot[s] = unknowns.len();
            unknowns.push(s);
        }
    }
    if unknowns.is_empty() {
        return Ok(0.0);
    }
    let mut rows: Vec<SparseRow> = Vec::with_capacity(unknowns.len());
    let mut rhs = Vec::with_capacity(unknowns.len());
    for &s in &unknowns {
        let mut row: SparseRow = Vec::new();
        for &(u, pu) in policy.distribution(s) {
            for &(t, w) in m.successors(s, u).unwrap_or(&[]) {
                if slot[t] != usize::MAX {
                    row.push((slot[t], pu * w));
                }
            }
        }
        rows.push(row);
        rhs.push(ssp.cost(s));
    }
    let x = linalg::solve_identity_minus(&rows, &rhs)?;
    Ok(x[slot[m.initial()]])
}

/// Iterator over every deterministic stationary policy of a model.
pub struct PolicyEnumerator<'a> {
    model: &'a LabeledModel,
    digits: Vec<usize>,
    done: bool,
}

/// Enumerates all `Π_q |A(q)|` deterministic stationary policies.
pub fn enumerate_policies(m: &LabeledModel) -> Result<PolicyEnumerator<'_>, ExactError> {
    let mut count: u64 = 1;
    for s in 0..m.num_states() {
        count = count.saturating_mul(m.choices(s).len() as u64);
        if count > MAX_ENUMERATED {
            return Err(ExactError::TooManyPolicies(count));
        }
    }
    Ok(PolicyEnumerator {
        model: m,
        digits: alloc::vec![0; m.num_states()],
        done: false,
    })
}

impl Iterator for PolicyEnumerator<'_> {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        if self.done {
            return None;
        }
        let m = self.model;
        let actions: Vec<ActionId> = self
            .digits
            .iter()
            .enumerate()
            .map(|(s, &k)| m.choices(s)[k].action)
            .collect();
        // Advance the mixed-radix counter, last state fastest.
        self.done = true;
        for s in (0..self.digits.len()).rev() {
            self.digits[s] += 1;
            if self.digits[s] < m.choices(s).len() {
                self.done = false;
                break;
            }
            self.digits[s] = 0;
        }
        Some(StationaryPolicy::deterministic(m, &actions).expect("enumerated actions are enabled"))
    }
}
