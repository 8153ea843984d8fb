//! LSTD actor-critic over the lookahead policy on an SSP.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionId, LabeledModel, StateId};
use crate::rsp::{LookaheadPolicy, RspError, Theta};
use crate::synthesis::{ProductModel, SspModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("action {action} is not enabled at state {state}")]
    NotEnabled { state: StateId, action: ActionId },
    #[error("state {state}, action {action}: successor {successor} is not a possible outcome in the model")]
    Unsupported {
        state: StateId,
        action: ActionId,
        successor: StateId,
    },
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("transition probabilities unavailable: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Policy(#[from] RspError),
}

/// Transition probabilities of the underlying labeled model, `P(q, u, ·)`.
pub trait TransitionSource {
    fn transition(&self, q: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError>;
}

impl<T: TransitionSource + ?Sized> TransitionSource for &T {
    fn transition(&self, q: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError> {
        (**self).transition(q, u)
    }
}

/// Reads probabilities straight from an MDP-mode model.
#[derive(Clone, Copy, Debug)]
pub struct ModelSource<'a>(pub &'a LabeledModel);

impl TransitionSource for ModelSource<'_> {
    fn transition(&self, q: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError> {
        self.0
            .successors(q, u)
            .map(<[_]>::to_vec)
            .ok_or(ProviderError::NotEnabled { state: q, action: u })
    }
}

/// Transition probabilities of SSP states, `P̃(x, u, ·)`.
pub trait ProbabilityProvider {
    fn probabilities(&mut self, x: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError>;
    /// Distinct `(x, u)` pairs whose probabilities had to be computed.
    fn computed_pairs(&self) -> usize;
}

/// Lifts base-model probabilities through the product and the SSP
/// conversion, memoizing each `(x, u)` pair on first request.
///
/// The terminal and `S̄*` states have fixed rows and never reach the
/// underlying source.
pub struct SspProbabilities<'a, T> {
    ssp: &'a SspModel,
    product: &'a ProductModel,
    source: T,
    memo: BTreeMap<(StateId, ActionId), Vec<(StateId, f64)>>,
}

impl<'a, T: TransitionSource> SspProbabilities<'a, T> {
    pub fn new(ssp: &'a SspModel, product: &'a ProductModel, source: T) -> Self {
        SspProbabilities {
            ssp,
            product,
            source,
            memo: BTreeMap::new(),
        }
    }

    pub fn source(&self) -> &T {
        &self.source
    }

    /// The memoized pairs, in key order.
    pub fn computed(&self) -> impl Iterator<Item = (StateId, ActionId)> + '_ {
        self.memo.keys().copied()
    }

    fn lift(&self, x: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError> {
        let p = self.ssp.origin(x).expect("non-terminal SSP state has a product origin");
        let (q, _) = self.product.projection(p);
        let mut out: Vec<(StateId, f64)> = Vec::new();
        for (q2, w) in self.source.transition(q, u)? {
            if w <= 0.0 {
                continue;
            }
            let p2 = self.product.lift(p, q2).ok_or(ProviderError::Unsupported {
                state: x,
                action: u,
                successor: q2,
            })?;
            let x2 = self.ssp.ssp_state(p2).unwrap_or(self.ssp.terminal());
            match out.iter_mut().find(|(t, _)| *t == x2) {
                Some(slot) => slot.1 += w,
                None => out.push((x2, w)),
            }
        }
        out.sort_by_key(|&(t, _)| t);
        Ok(out)
    }
}

impl<T: TransitionSource> ProbabilityProvider for SspProbabilities<'_, T> {
    fn probabilities(&mut self, x: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError> {
        if !self.ssp.model().is_enabled(x, u) {
            return Err(ProviderError::NotEnabled { state: x, action: u });
        }
        if x == self.ssp.terminal() {
            return Ok(alloc::vec![(x, 1.0)]);
        }
        if self.ssp.is_bad(x) {
            return Ok(alloc::vec![(self.ssp.initial(), 1.0)]);
        }
        if let Some(row) = self.memo.get(&(x, u)) {
            return Ok(row.clone());
        }
        let row = self.lift(x, u)?;
        self.memo.insert((x, u), row.clone());
        Ok(row)
    }

    fn computed_pairs(&self) -> usize {
        self.memo.len()
    }
}

/// Step size `scale / (1 + k)^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub scale: f64,
    pub exponent: f64,
}

impl Schedule {
    pub fn at(&self, k: usize) -> f64 {
        self.scale / libm::pow(1.0 + k as f64, self.exponent)
    }
}

/// Which critic statistics form `r_{k+1}`, and which `r` the actor uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CriticIndexing {
    /// `r_{k+1} = −A_k⁻¹ b_k`; the actor step at `k` uses `r_k`.
    #[default]
    PreUpdate,
    /// `r_{k+1} = −A_{k+1}⁻¹ b_{k+1}`; the actor step at `k` uses `r_{k+1}`.
    PostUpdate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub theta0: Theta,
    /// Critic step sizes `γ_k`.
    pub gamma: Schedule,
    /// Actor step sizes `β_k`.
    pub beta: Schedule,
    /// `C` in `Γ(r) = min(1, C / ‖r‖)`.
    pub gamma_bound: f64,
    /// Stop once the gradient-norm estimate is at most this.
    pub epsilon: f64,
    /// The stopping rule is not checked before this many iterations.
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Iterations before `A` may be inverted.
    pub gate_iterations: usize,
    /// Smallest singular value of `A` required to invert it.
    pub gate_min_singular: f64,
    pub ema_decay: f64,
    pub reset_trace_on_restart: bool,
    pub indexing: CriticIndexing,
    pub seed: u64,
    /// Exact evaluation cadence in iterations; `None` disables it.
    pub eval_every: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 0.9,
            theta0: [5.0, -0.5],
            gamma: Schedule {
                scale: 1.0,
                exponent: 0.6,
            },
            beta: Schedule {
                scale: 0.05,
                exponent: 0.85,
            },
            gamma_bound: 10.0,
            epsilon: 1e-3,
            min_iterations: 500,
            max_iterations: 5000,
            gate_iterations: 50,
            gate_min_singular: 1e-8,
            ema_decay: 0.99,
            reset_trace_on_restart: false,
            indexing: CriticIndexing::PreUpdate,
            seed: 0,
            eval_every: Some(25),
        }
    }
}

type Mat2 = [[f64; 2]; 2];

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: &[f64; 2]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Smallest singular value of a 2×2 matrix.
pub fn min_singular_value(a: &Mat2) -> f64 {
    let fro2 = a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs();
    let disc = libm::sqrt((fro2 * fro2 - 4.0 * det * det).max(0.0));
    let smax = libm::sqrt((fro2 + disc) / 2.0);
    if smax == 0.0 {
        0.0
    } else {
        det / smax
    }
}

/// LSTD statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CriticState {
    pub z: [f64; 2],
    pub b: [f64; 2],
    pub a: Mat2,
    pub r: [f64; 2],
}

impl CriticState {
    /// `−A⁻¹ b`, if `A` is well enough conditioned.
    pub fn solve(a: &Mat2, b: &[f64; 2], min_singular: f64) -> Option<[f64; 2]> {
        if min_singular_value(a).is_nan() || min_singular_value(a) < min_singular {
            return None;
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let x = [
            (a[1][1] * b[0] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - a[1][0] * b[0]) / det,
        ];
        Some([-x[0], -x[1]])
    }
}

/// One critic step. `z`, `b` and `A` move by the recurrences using the
/// pre-update trace; `r` is re-solved from the statistics selected by
/// `indexing` when `solve` is true and `A` passes the gate. Returns whether
/// `r` was re-solved.
pub fn critic_update(
    c: &mut CriticState,
    lambda: f64,
    psi_now: &[f64; 2],
    psi_next: &[f64; 2],
    g_now: f64,
    gamma: f64,
    solve: Option<(CriticIndexing, f64)>,
) -> bool {
    let (a_old, b_old) = (c.a, c.b);
    let z = c.z;
    for i in 0..2 {
        c.b[i] += gamma * (g_now * z[i] - c.b[i]);
        for j in 0..2 {
            c.a[i][j] += gamma * (z[i] * (psi_next[j] - psi_now[j]) - c.a[i][j]);
        }
        c.z[i] = lambda * z[i] + psi_now[i];
    }
    let Some((indexing, min_singular)) = solve else {
        return false;
    };
    let solved = match indexing {
        CriticIndexing::PreUpdate => CriticState::solve(&a_old, &b_old, min_singular),
        CriticIndexing::PostUpdate => CriticState::solve(&c.a, &c.b, min_singular),
    };
    match solved {
        Some(r) => {
            c.r = r;
            true
        }
        None => false,
    }
}

/// `Γ(r) = min(1, C / ‖r‖)`.
pub fn step_normalizer(r: &[f64; 2], bound: f64) -> f64 {
    let n = norm(r);
    if n <= bound {
        1.0
    } else {
        bound / n
    }
}

/// Exponential moving average of the actor's update-direction norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradientEma {
    pub value: f64,
    pub decay: f64,
}

impl GradientEma {
    pub fn new(decay: f64) -> Self {
        GradientEma { value: 0.0, decay }
    }

    pub fn push(&mut self, magnitude: f64) -> f64 {
        self.value = self.decay * self.value + (1.0 - self.decay) * magnitude;
        self.value
    }
}

/// Actor parameters and the gradient-norm estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorState {
    pub theta: Theta,
    pub ema: GradientEma,
}

/// `θ ← θ − β Γ(r) (rᵀψ) ψ`; the EMA absorbs `‖(rᵀψ) ψ‖`.
pub fn actor_update(a: &mut ActorState, r: &[f64; 2], psi_next: &[f64; 2], beta: f64, gamma_bound: f64) {
    let s = dot(r, psi_next);
    let dir = [s * psi_next[0], s * psi_next[1]];
    let step = beta * step_normalizer(r, gamma_bound);
    a.theta[0] -= step * dir[0];
    a.theta[1] -= step * dir[1];
    a.ema.push(norm(&dir));
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `x_k`.
    pub state: StateId,
    /// `u_k`.
    pub action: ActionId,
    /// `θ_{k+1}`.
    pub theta: Theta,
    /// `r_{k+1}`.
    pub r: [f64; 2],
    /// `g(x_k, u_k)`.
    pub cost: f64,
    /// Terminal visits so far.
    pub episodes: usize,
    /// Distinct pairs computed by the provider so far.
    pub pairs: usize,
    pub gradient_estimate: f64,
    /// Whether `A` failed the conditioning gate after the warm-up.
    pub gate_failed: bool,
    /// Exact reachability of the policy at `θ_{k+1}`, when evaluated.
    pub exact: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    /// Exact reachability at `θ_0`, when evaluation is enabled.
    pub initial_exact: Option<f64>,
    pub records: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub theta: Theta,
    /// Stopped by the gradient-norm rule rather than the iteration cap.
    pub converged: bool,
    pub iterations: usize,
    pub trace: RunTrace,
}

/// Runs the actor-critic loop on `ssp` from `θ_0`.
///
/// `evaluate` maps a parameter vector to its exact reachability
/// probability; it is called at `θ_0`, every `eval_every` iterations, and
/// on the final parameters.
pub fn run<P: ProbabilityProvider>(
    ssp: &SspModel,
    provider: &mut P,
    policy: &LookaheadPolicy,
    cfg: &RunConfig,
    evaluate: &mut dyn FnMut(&Theta) -> Option<f64>,
) -> Result<RunOutcome, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = ssp.initial();
    let terminal = ssp.terminal();
    let mut critic = CriticState::default();
    let mut actor = ActorState {
        theta: cfg.theta0,
        ema: GradientEma::new(cfg.ema_decay),
    };
    let mut trace = RunTrace {
        initial_exact: cfg.eval_every.and_then(|_| evaluate(&actor.theta)),
        records: Vec::new(),
    };

    let mut x = x0;
    let mut u = policy.sample_action(x, &actor.theta, &mut rng);
    let mut episodes = 0;
    let mut converged = false;
    let mut k = 0;
    while k < cfg.max_iterations {
        let theta_k = actor.theta;
        let psi_now = policy.log_policy_gradient(x, u, &theta_k)?;
        let cost = ssp.cost(x);
        let restarted = x == terminal;
        let x_next = if restarted {
            episodes += 1;
            x0
        } else {
            let row = provider.probabilities(x, u)?;
            sample_successor(&row, &mut rng)
        };
        let u_next = policy.sample_action(x_next, &theta_k, &mut rng);
        let psi_next = policy.log_policy_gradient(x_next, u_next, &theta_k)?;

        let r_k = critic.r;
        let warm = k >= cfg.gate_iterations;
        let solved = critic_update(
            &mut critic,
            cfg.lambda,
            &psi_now,
            &psi_next,
            cost,
            cfg.gamma.at(k),
            warm.then_some((cfg.indexing, cfg.gate_min_singular)),
        );
        if restarted && cfg.reset_trace_on_restart {
            critic.z = [0.0, 0.0];
        }
        let r_actor = match cfg.indexing {
            CriticIndexing::PreUpdate => r_k,
            CriticIndexing::PostUpdate => critic.r,
        };
        actor_update(&mut actor, &r_actor, &psi_next, cfg.beta.at(k), cfg.gamma_bound);

        k += 1;
        let stop = k >= cfg.min_iterations && actor.ema.value <= cfg.epsilon;
        let last = stop || k == cfg.max_iterations;
        let exact = match cfg.eval_every {
            Some(every) if last || k % every.max(1) == 0 => evaluate(&actor.theta),
            _ => None,
        };
        trace.records.push(IterationRecord {
            k: k - 1,
            state: x,
            action: u,
            theta: actor.theta,
            r: critic.r,
            cost,
            episodes,
            pairs: provider.computed_pairs(),
            gradient_estimate: actor.ema.value,
            gate_failed: warm && !solved,
            exact,
        });
        x = x_next;
        u = u_next;
        if stop {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome {
        theta: actor.theta,
        converged,
        iterations: k,
        trace,
    })
}

fn sample_successor<R: Rng + ?Sized>(row: &[(StateId, f64)], rng: &mut R) -> StateId {
    if row.len() == 1 {
        return row[0].0;
    }
    let total: f64 = row.iter().map(|&(_, w)| w).sum();
    let x: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for &(t, w) in row {
        acc += w;
        if x < acc {
            return t;
        }
    }
    row[row.len() - 1].0
}
