//! Run configuration: a TOML file whose every key is optional, resolved
//! against the file's directory, then overridden from the command line.
//!
//! ```toml
//! [input]
//! map = "desk.map"        # or: model = "robot.model"
//! dra = "formula7.dra"
//! label_timing = "next"   # or "current"
//!
//! [noise]
//! success = 0.9
//! confusion = "adjacent"  # or "uniform"
//! samples = 0             # > 0 replaces probabilities by simulated frequencies
//!
//! [rsp]
//! horizon = 2
//! theta0 = [5.0, -0.5]
//!
//! [learning]
//! lambda = 0.9
//! max_iterations = 5000
//! seeds = [0, 1, 2, 3, 4]
//! eval_every = 25         # 0 disables exact evaluation
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tlac_core::actor_critic::{CriticIndexing, Schedule};
use tlac_core::{LabelTiming, RspConfig, RunConfig};

use crate::grid::{Confusion, Noise};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub input: InputSection,
    pub noise: NoiseSection,
    pub rsp: RspSection,
    pub learning: LearningSection,
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub map: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub dra: Option<PathBuf>,
    pub label_timing: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub success: Option<f64>,
    pub confusion: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RspSection {
    pub horizon: Option<usize>,
    pub radius: Option<usize>,
    pub theta0: Option<[f64; 2]>,
    pub unreachable_progress: Option<f64>,
    pub sequence_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    pub lambda: Option<f64>,
    pub gamma_scale: Option<f64>,
    pub gamma_exponent: Option<f64>,
    pub beta_scale: Option<f64>,
    pub beta_exponent: Option<f64>,
    pub gamma_bound: Option<f64>,
    pub epsilon: Option<f64>,
    pub min_iterations: Option<usize>,
    pub max_iterations: Option<usize>,
    pub gate_iterations: Option<usize>,
    pub gate_min_singular: Option<f64>,
    pub ema_decay: Option<f64>,
    pub reset_trace_on_restart: Option<bool>,
    pub indexing: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub eval_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("`{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

/// Where the environment comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Map(PathBuf),
    Model(PathBuf),
}

/// Fully resolved settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub input: Option<Input>,
    pub dra: Option<PathBuf>,
    pub timing: LabelTiming,
    pub noise: Noise,
    pub rsp: RspConfig,
    pub run: RunConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            input: None,
            dra: None,
            timing: LabelTiming::NextState,
            noise: Noise::default(),
            rsp: RspConfig::default(),
            run: RunConfig::default(),
            seeds: vec![0],
            out_dir: PathBuf::from("out"),
        }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: FileConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        Settings::from_file(file, path.parent().unwrap_or(Path::new("")))
    }

    /// Applies `file` on top of the defaults; relative paths are taken
    /// relative to `base`.
    pub fn from_file(file: FileConfig, base: &Path) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        let at = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        s.input = match (file.input.map, file.input.model) {
            (Some(_), Some(_)) => return Err(invalid("input", "give either `map` or `model`, not both")),
            (Some(m), None) => Some(Input::Map(at(m))),
            (None, Some(m)) => Some(Input::Model(at(m))),
            (None, None) => None,
        };
        s.dra = file.input.dra.map(at);
        if let Some(t) = file.input.label_timing {
            s.timing = parse_timing(&t)?;
        }

        let n = file.noise;
        set(&mut s.noise.success, n.success);
        if let Some(c) = n.confusion {
            s.noise.confusion = parse_confusion(&c)?;
        }
        set(&mut s.noise.samples, n.samples);
        set(&mut s.noise.seed, n.seed);

        let r = file.rsp;
        set(&mut s.rsp.horizon, r.horizon);
        s.rsp.radius = r.radius.or(s.rsp.radius);
        s.rsp.unreachable_progress = r.unreachable_progress.or(s.rsp.unreachable_progress);
        set(&mut s.rsp.sequence_cap, r.sequence_cap);
        set(&mut s.run.theta0, r.theta0);

        let l = file.learning;
        let run = &mut s.run;
        set(&mut run.lambda, l.lambda);
        set(&mut run.gamma.scale, l.gamma_scale);
        set(&mut run.gamma.exponent, l.gamma_exponent);
        set(&mut run.beta.scale, l.beta_scale);
        set(&mut run.beta.exponent, l.beta_exponent);
        set(&mut run.gamma_bound, l.gamma_bound);
        set(&mut run.epsilon, l.epsilon);
        set(&mut run.min_iterations, l.min_iterations);
        set(&mut run.max_iterations, l.max_iterations);
        set(&mut run.gate_iterations, l.gate_iterations);
        set(&mut run.gate_min_singular, l.gate_min_singular);
        set(&mut run.ema_decay, l.ema_decay);
        set(&mut run.reset_trace_on_restart, l.reset_trace_on_restart);
        if let Some(i) = l.indexing {
            run.indexing = parse_indexing(&i)?;
        }
        if let Some(e) = l.eval_every {
            run.eval_every = (e > 0).then_some(e);
        }
        set(&mut s.seeds, l.seeds);
        if let Some(d) = file.output.dir {
            s.out_dir = at(d);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.noise;
        if !(n.success > 0.0 && n.success <= 1.0) {
            return Err(invalid("noise.success", "must lie in (0, 1]"));
        }
        if self.rsp.horizon == 0 {
            return Err(invalid("rsp.horizon", "must be positive"));
        }
        if self.rsp.radius == Some(0) {
            return Err(invalid("rsp.radius", "must be positive"));
        }
        let r = &self.run;
        if !(0.0..=1.0).contains(&r.lambda) {
            return Err(invalid("learning.lambda", "must lie in [0, 1]"));
        }
        check_schedule("learning.gamma", &r.gamma)?;
        check_schedule("learning.beta", &r.beta)?;
        if !(r.gamma_bound > 0.0) {
            return Err(invalid("learning.gamma_bound", "must be positive"));
        }
        if !(0.0..1.0).contains(&r.ema_decay) {
            return Err(invalid("learning.ema_decay", "must lie in [0, 1)"));
        }
        if r.max_iterations == 0 {
            return Err(invalid("learning.max_iterations", "must be positive"));
        }
        if r.theta0.iter().any(|x| !x.is_finite()) {
            return Err(invalid("rsp.theta0", "must be finite"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("learning.seeds", "needs at least one seed"));
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn check_schedule(key: &'static str, s: &Schedule) -> Result<(), ConfigError> {
    if !(s.scale > 0.0) || !s.exponent.is_finite() {
        return Err(invalid(key, "scale must be positive and exponent finite"));
    }
    Ok(())
}

pub fn parse_timing(s: &str) -> Result<LabelTiming, ConfigError> {
    match s {
        "next" => Ok(LabelTiming::NextState),
        "current" => Ok(LabelTiming::CurrentState),
        _ => Err(invalid(
            "input.label_timing",
            format!("expected `next` or `current`, got `{s}`"),
        )),
    }
}

pub fn parse_confusion(s: &str) -> Result<Confusion, ConfigError> {
    match s {
        "uniform" => Ok(Confusion::Uniform),
        "adjacent" => Ok(Confusion::Adjacent),
        _ => Err(invalid(
            "noise.confusion",
            format!("expected `uniform` or `adjacent`, got `{s}`"),
        )),
    }
}

pub fn parse_indexing(s: &str) -> Result<CriticIndexing, ConfigError> {
    match s {
        "pre" => Ok(CriticIndexing::PreUpdate),
        "post" => Ok(CriticIndexing::PostUpdate),
        _ => Err(invalid(
            "learning.indexing",
            format!("expected `pre` or `post`, got `{s}`"),
        )),
    }
}
