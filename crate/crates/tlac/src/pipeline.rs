//! Loads an environment and a task automaton, synthesizes the reachability
//! problem, and runs the learner against it.

use std::fmt;
use std::path::Path;

use tlac_core::actor_critic::{run, RunError};
use tlac_core::exact::{eval_policy_reach, max_reach, ExactError, Reachability};
use tlac_core::model::{nts_from_mdp, RabinAutomaton};
use tlac_core::rsp::RspError;
use tlac_core::synthesis::{amecs, build_product, goal_and_bad_sets, mrp_to_ssp, SynthesisError};
use tlac_core::{
    Amec, LabelTiming, LabeledModel, LookaheadPolicy, Mode, ModelSource, ProbabilityProvider, ProductModel, RspConfig,
    RunConfig, RunOutcome, SspModel, SspProbabilities, StateSet, StationaryPolicy, Theta,
};

use crate::config::{Input, Settings};
use crate::format::{parse_dra, parse_model, FormatError};
use crate::grid::{GridEnv, GridMap, GridSource, MapError, Noise};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no input: set `input.map` or `input.model`")]
    NoInput,
    #[error("no task automaton: set `input.dra`")]
    NoAutomaton,
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: {source}")]
    Map { path: String, source: MapError },
    #[error("the product has no accepting end component; the task cannot be satisfied")]
    NoAmec,
    #[error("the initial state cannot reach an accepting end component; the task has probability zero")]
    Unreachable,
    #[error(
        "the initial state already lies in an accepting end component; any in-component policy satisfies the task"
    )]
    TrivialInitial,
    #[error("transition probabilities are unknown for a nondeterministic model")]
    NoProbabilities,
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Rsp(#[from] RspError),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Where transition probabilities come from.
#[derive(Clone, Debug)]
pub enum Environment {
    /// Probabilities are computed on demand from the map's noise model.
    Grid(GridEnv),
    /// A model file: probabilities are known in MDP mode only.
    Model(LabeledModel),
}

impl Environment {
    pub fn load(input: &Input, noise: Noise) -> Result<Environment, PipelineError> {
        match input {
            Input::Map(p) => {
                let wrap = |source| PipelineError::Map {
                    path: p.display().to_string(),
                    source,
                };
                let map = GridMap::parse(&read(p)?).map_err(wrap)?;
                Ok(Environment::Grid(GridEnv::new(&map, noise).map_err(wrap)?))
            }
            Input::Model(p) => {
                let m = parse_model(&read(p)?).map_err(|source| PipelineError::Format {
                    path: p.display().to_string(),
                    source,
                })?;
                Ok(Environment::Model(m))
            }
        }
    }

    /// The abstraction the learner plans on.
    pub fn nts(&self) -> LabeledModel {
        match self {
            Environment::Grid(env) => env.nts().clone(),
            Environment::Model(m) if m.mode() == Mode::Mdp => nts_from_mdp(m),
            Environment::Model(m) => m.clone(),
        }
    }

    /// The full MDP, when probabilities are known. Only exact evaluation
    /// uses it.
    pub fn mdp(&self) -> Option<LabeledModel> {
        match self {
            Environment::Grid(env) => Some(env.mdp()),
            Environment::Model(m) if m.mode() == Mode::Mdp => Some(m.clone()),
            Environment::Model(_) => None,
        }
    }
}

pub fn load_automaton(path: &Path) -> Result<RabinAutomaton, PipelineError> {
    parse_dra(&read(path)?).map_err(|source| PipelineError::Format {
        path: path.display().to_string(),
        source,
    })
}

/// Everything synthesis produces for one environment and task.
pub struct Problem {
    pub environment: Environment,
    pub product: ProductModel,
    /// Same states as `product`, with probabilities.
    pub product_mdp: Option<ProductModel>,
    pub amecs: Vec<Amec>,
    pub goal: StateSet,
    pub bad: StateSet,
    pub ssp: SspModel,
}

/// One learning run.
pub struct Learned {
    pub outcome: RunOutcome,
    pub policy: LookaheadPolicy,
    /// Distinct SSP state-action pairs whose probabilities were computed.
    pub ssp_pairs: usize,
    /// Distinct environment pairs computed, for grid inputs.
    pub model_pairs: Option<usize>,
}

impl Problem {
    pub fn load(s: &Settings) -> Result<Problem, PipelineError> {
        let input = s.input.as_ref().ok_or(PipelineError::NoInput)?;
        let dra = load_automaton(s.dra.as_ref().ok_or(PipelineError::NoAutomaton)?)?;
        Problem::new(Environment::load(input, s.noise)?, &dra, s.timing)
    }

    pub fn new(environment: Environment, dra: &RabinAutomaton, timing: LabelTiming) -> Result<Problem, PipelineError> {
        let product = build_product(&environment.nts(), dra, timing)?;
        let product_mdp = match environment.mdp() {
            Some(m) => {
                let p = build_product(&m, dra, timing)?;
                assert!(
                    (0..p.num_states()).all(|x| p.projection(x) == product.projection(x)),
                    "products over equal supports are numbered alike"
                );
                Some(p)
            }
            None => None,
        };
        let found = amecs(&product);
        if found.is_empty() {
            return Err(PipelineError::NoAmec);
        }
        let (goal, bad) = goal_and_bad_sets(product.model(), &found);
        let init = product.model().initial();
        if goal.contains(init) {
            return Err(PipelineError::TrivialInitial);
        }
        if bad.contains(init) {
            return Err(PipelineError::Unreachable);
        }
        let ssp = mrp_to_ssp(&product, &goal, &bad)?;
        Ok(Problem {
            environment,
            product,
            product_mdp,
            amecs: found,
            goal,
            bad,
            ssp,
        })
    }

    /// SSP pairs whose probabilities are not fixed by construction: those
    /// of states other than the terminal and `S̄*`.
    pub fn lazy_pairs(&self) -> usize {
        let m = self.ssp.model();
        (0..m.num_states())
            .filter(|&x| x != self.ssp.terminal() && !self.ssp.is_bad(x))
            .map(|x| m.choices(x).len())
            .sum()
    }

    fn mdp_product(&self) -> Result<&ProductModel, PipelineError> {
        self.product_mdp.as_ref().ok_or(PipelineError::NoProbabilities)
    }

    /// Maximal satisfaction probability with an optimal policy on the
    /// product.
    pub fn optimal(&self) -> Result<Reachability, PipelineError> {
        Ok(max_reach(self.mdp_product()?.model(), &self.goal, &self.bad)?)
    }

    /// Exact satisfaction probability of a policy on the product.
    pub fn evaluate(&self, policy: &StationaryPolicy) -> Result<f64, PipelineError> {
        let m = self.mdp_product()?.model();
        Ok(eval_policy_reach(m, policy, &self.goal, &self.bad)?[m.initial()])
    }

    /// Exact satisfaction probability of the lookahead policy at `theta`.
    pub fn evaluate_rsp(&self, policy: &LookaheadPolicy, theta: &Theta) -> Result<f64, PipelineError> {
        let m = self.mdp_product()?.model();
        self.evaluate(&policy.on_product(&self.ssp, m, theta))
    }

    /// Lifts a policy over SSP states to the product; goal states take
    /// their first enabled action.
    pub fn lift_policy(&self, pol: &StationaryPolicy) -> Result<StationaryPolicy, PipelineError> {
        let m = self.mdp_product()?.model();
        let table = (0..m.num_states())
            .map(|p| match self.ssp.ssp_state(p) {
                Some(x) => pol.distribution(x).to_vec(),
                None => vec![(m.choices(p)[0].action, 1.0)],
            })
            .collect();
        StationaryPolicy::new(m, table).map_err(|e| PipelineError::Format {
            path: "policy".into(),
            source: e.into(),
        })
    }

    pub fn learn(&self, rsp: &RspConfig, cfg: &RunConfig) -> Result<Learned, PipelineError> {
        let policy = LookaheadPolicy::new(&self.ssp, rsp)?;
        let exact = self.product_mdp.is_some();
        let mut evaluate = |theta: &Theta| {
            if exact {
                self.evaluate_rsp(&policy, theta).ok()
            } else {
                None
            }
        };
        let (outcome, ssp_pairs, model_pairs) = match &self.environment {
            Environment::Grid(env) => {
                let source = GridSource::new(env);
                let mut provider = SspProbabilities::new(&self.ssp, &self.product, &source);
                let out = run(&self.ssp, &mut provider, &policy, cfg, &mut evaluate)?;
                let pairs = provider.computed_pairs();
                (out, pairs, Some(source.computed()))
            }
            Environment::Model(m) if m.mode() == Mode::Mdp => {
                let mut provider = SspProbabilities::new(&self.ssp, &self.product, ModelSource(m));
                let out = run(&self.ssp, &mut provider, &policy, cfg, &mut evaluate)?;
                let pairs = provider.computed_pairs();
                (out, pairs, None)
            }
            Environment::Model(_) => return Err(PipelineError::NoProbabilities),
        };
        Ok(Learned {
            outcome,
            policy,
            ssp_pairs,
            model_pairs,
        })
    }

    /// Runs one learner per seed in parallel, in seed order.
    pub fn learn_seeds(&self, rsp: &RspConfig, cfg: &RunConfig, seeds: &[u64]) -> Vec<Result<Learned, PipelineError>> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    let cfg = RunConfig { seed, ..cfg.clone() };
                    scope.spawn(move || self.learn(rsp, &cfg))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("learner thread panicked"))
                .collect()
        })
    }

    pub fn sizes(&self) -> Sizes {
        let base = self.product.model();
        Sizes {
            model_states: self.environment.nts().num_states(),
            automaton_states: self.product.automaton().num_states(),
            product_states: self.product.num_states(),
            product_unpruned: self.product.unpruned_states(),
            product_pairs: base.num_choices(),
            amecs: self.amecs.len(),
            goal_states: self.goal.len(),
            bad_states: self.bad.len(),
            ssp_states: self.ssp.num_states(),
            lazy_pairs: self.lazy_pairs(),
        }
    }
}

/// Size summary of a synthesized problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sizes {
    pub model_states: usize,
    pub automaton_states: usize,
    pub product_states: usize,
    pub product_unpruned: usize,
    pub product_pairs: usize,
    pub amecs: usize,
    pub goal_states: usize,
    pub bad_states: usize,
    pub ssp_states: usize,
    pub lazy_pairs: usize,
}

impl fmt::Display for Sizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model states: {}", self.model_states)?;
        writeln!(f, "automaton states: {}", self.automaton_states)?;
        writeln!(
            f,
            "product states: {} (of {} before pruning)",
            self.product_states, self.product_unpruned
        )?;
        writeln!(f, "product state-action pairs: {}", self.product_pairs)?;
        writeln!(f, "accepting end components: {}", self.amecs)?;
        writeln!(f, "goal states: {}", self.goal_states)?;
        writeln!(f, "zero-probability states: {}", self.bad_states)?;
        writeln!(f, "ssp states: {}", self.ssp_states)?;
        write!(f, "ssp pairs needing probabilities: {}", self.lazy_pairs)
    }
}

/// Median of a nonempty slice.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
