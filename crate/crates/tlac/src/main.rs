use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tlac::config::{parse_confusion, parse_timing, Input, Settings};
use tlac::format::{parse_policy, write_model, write_policy, write_trace, write_values};
use tlac::pipeline::{median, Learned, PipelineError, Problem};

#[derive(Parser)]
#[command(
    name = "tlac",
    version,
    about = "Temporal-logic control with a lookahead actor-critic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a policy with the actor-critic and write its trace.
    Synthesize(Common),
    /// Learn, then compare against the exact optimum.
    Compare(Common),
    /// Exact satisfaction probability of a saved policy table.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Table written by `synthesize` (policy.tsv).
        #[arg(long)]
        policy: PathBuf,
    },
    /// Write the abstraction, product and SSP as model files.
    Build(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Grid map input.
    #[arg(long, conflicts_with = "model")]
    map: Option<PathBuf>,
    /// Model file input.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Rabin automaton of the task.
    #[arg(long)]
    dra: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seeds, comma separated; one run per seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    min_iterations: Option<usize>,
    /// Initial parameters as `safety,progress`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    theta0: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Exact evaluation cadence; 0 disables it.
    #[arg(long)]
    eval_every: Option<usize>,
    /// Turn success probability of the grid noise model.
    #[arg(long)]
    success: Option<f64>,
    /// Grid failure outcomes: `uniform` or `adjacent`.
    #[arg(long)]
    confusion: Option<String>,
    /// Simulated attempts per grid pair; 0 uses exact probabilities.
    #[arg(long)]
    samples: Option<usize>,
    /// `next` or `current`.
    #[arg(long)]
    label_timing: Option<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        if let Some(p) = &self.map {
            s.input = Some(Input::Map(p.clone()));
        }
        if let Some(p) = &self.model {
            s.input = Some(Input::Model(p.clone()));
        }
        if let Some(p) = &self.dra {
            s.dra = Some(p.clone());
        }
        if let Some(p) = &self.out {
            s.out_dir = p.clone();
        }
        if let Some(v) = &self.seeds {
            s.seeds = v.clone();
        }
        if let Some(v) = self.max_iterations {
            s.run.max_iterations = v;
        }
        if let Some(v) = self.min_iterations {
            s.run.min_iterations = v;
        }
        if let Some(v) = &self.theta0 {
            s.run.theta0 = [v[0], v[1]];
        }
        if let Some(v) = self.horizon {
            s.rsp.horizon = v;
        }
        if let Some(v) = self.lambda {
            s.run.lambda = v;
        }
        if let Some(v) = self.epsilon {
            s.run.epsilon = v;
        }
        if let Some(v) = self.eval_every {
            s.run.eval_every = (v > 0).then_some(v);
        }
        if let Some(v) = self.success {
            s.noise.success = v;
        }
        if let Some(v) = &self.confusion {
            s.noise.confusion = parse_confusion(v)?;
        }
        if let Some(v) = self.samples {
            s.noise.samples = v;
        }
        if let Some(v) = &self.label_timing {
            s.timing = parse_timing(v)?;
        }
        s.validate()?;
        Ok(s)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Per-seed summary lines; also written next to the trace.
fn seed_summary(seed: u64, l: &Learned, lazy_pairs: usize) -> String {
    let o = &l.outcome;
    let mut s = String::new();
    let _ = writeln!(s, "seed: {seed}");
    let _ = writeln!(s, "converged: {}", o.converged);
    let _ = writeln!(s, "iterations: {}", o.iterations);
    let _ = writeln!(s, "theta: [{:.4}, {:.4}]", o.theta[0], o.theta[1]);
    let _ = writeln!(s, "episodes: {}", o.trace.records.last().map_or(0, |r| r.episodes));
    let _ = writeln!(s, "ssp pairs computed: {} of {}", l.ssp_pairs, lazy_pairs);
    if let Some(m) = l.model_pairs {
        let _ = writeln!(s, "environment pairs computed: {m}");
    }
    let _ = writeln!(s, "initial probability: {}", fmt_opt(o.trace.initial_exact));
    let _ = writeln!(s, "final probability: {}", fmt_opt(final_exact(l)));
    s
}

fn final_exact(l: &Learned) -> Option<f64> {
    l.outcome.trace.records.last().and_then(|r| r.exact)
}

fn learn(s: &Settings, problem: &Problem, optimum: Option<f64>) -> Result<ExitCode> {
    let lazy = problem.lazy_pairs();
    let runs = problem.learn_seeds(&s.rsp, &s.run, &s.seeds);
    let mut all_converged = true;
    let mut finals = Vec::new();
    for (&seed, l) in s.seeds.iter().zip(runs) {
        let l = l?;
        let dir = s.out_dir.join(format!("seed-{seed}"));
        let mut summary = seed_summary(seed, &l, lazy);
        if let (Some(opt), Some(p)) = (optimum, final_exact(&l)) {
            let _ = writeln!(summary, "ratio to optimum: {:.4}", p / opt);
        }
        write(&dir, "trace.csv", &write_trace(&l.outcome.trace.records))?;
        let pol = l.policy.to_stationary(&problem.ssp, &l.outcome.theta);
        write(&dir, "policy.tsv", &write_policy(problem.ssp.model(), &pol))?;
        write(&dir, "summary.txt", &summary)?;
        print!("{summary}");
        println!();
        all_converged &= l.outcome.converged;
        finals.extend(final_exact(&l));
    }
    if finals.len() > 1 {
        let m = median(&finals);
        println!("median final probability: {m:.4}");
        if let Some(opt) = optimum {
            println!("median ratio to optimum: {:.4}", m / opt);
        }
    }
    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<PipelineError>() {
                Some(PipelineError::NoAmec) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn try_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Synthesize(c) | Command::Compare(c) | Command::Build(c) => c,
        Command::Eval { common, .. } => common,
    };
    let s = common.settings()?;
    let problem = match Problem::load(&s) {
        Err(PipelineError::TrivialInitial) => {
            println!("{}", PipelineError::TrivialInitial);
            return Ok(ExitCode::SUCCESS);
        }
        other => other?,
    };
    println!("{}", problem.sizes());
    println!();
    match cli.command {
        Command::Synthesize(_) => learn(&s, &problem, None),
        Command::Compare(_) => {
            let opt = problem.optimal()?;
            let p = opt.initial_value(problem.product_mdp.as_ref().unwrap().model());
            println!("optimal probability: {p:.4}");
            println!();
            let m = problem.product.model();
            write(&s.out_dir, "optimal_values.csv", &write_values(m, &opt.values))?;
            write(&s.out_dir, "optimal_policy.tsv", &write_policy(m, &opt.policy))?;
            learn(&s, &problem, Some(p))
        }
        Command::Eval { policy, .. } => {
            let text = std::fs::read_to_string(&policy).with_context(|| format!("reading {}", policy.display()))?;
            let table = parse_policy(problem.ssp.model(), &text)?;
            let p = problem.evaluate(&problem.lift_policy(&table)?)?;
            println!("satisfaction probability: {p:.6}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Build(_) => {
            write(
                &s.out_dir,
                "abstraction.model",
                &write_model(&problem.environment.nts()),
            )?;
            if let Some(m) = problem.environment.mdp() {
                write(&s.out_dir, "mdp.model", &write_model(&m))?;
            }
            write(&s.out_dir, "product.model", &write_model(problem.product.model()))?;
            write(&s.out_dir, "ssp.model", &write_model(problem.ssp.model()))?;
            println!("wrote models to {}", s.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
