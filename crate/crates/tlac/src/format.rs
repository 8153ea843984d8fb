//! Plain-text formats: labeled models, Rabin automata, policy tables, value
//! vectors and learning traces.
//!
//! Model files are line oriented, `#` starts a comment:
//!
//! ```text
//! mode mdp
//! states 3
//! initial 0
//! props goal
//! actions go stay
//! name 2 home
//! label 2: goal
//! trans 0 go 1 0.5
//! trans 0 go 2 0.5
//! ```
//!
//! `actions` is optional and fixes action numbering; without it actions are
//! numbered by first use.
//!
//! Automaton files use `edge <s> {p,q} <t>` for one letter and
//! `edge <s> else <t>` for every letter not listed, plus one
//! `pair L={..} K={..}` line per Rabin pair.

use std::fmt::Write as _;

use tlac_core::actor_critic::IterationRecord;
use tlac_core::model::{RabinAutomaton, RabinBuilder, RabinError};
use tlac_core::{LabeledModel, Letter, Mode, ModelBuilder, ModelError, PolicyError, StateId, StationaryPolicy};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}` directive")]
    Missing(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rabin(#[from] RabinError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from one.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn number<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("expected {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

fn state(line: usize, tok: Option<&str>, n: usize) -> Result<StateId, FormatError> {
    let s: StateId = number(line, tok, "state")?;
    if s >= n {
        return Err(syntax(line, format!("state {s} out of range (states {n})")));
    }
    Ok(s)
}

fn letter_of(line: usize, props: &[String], names: &[&str]) -> Result<Letter, FormatError> {
    let mut letter = 0;
    for name in names {
        let i = props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| syntax(line, format!("unknown proposition `{name}`")))?;
        letter |= 1 << i;
    }
    Ok(letter)
}

fn letter_names(props: &[String], letter: Letter) -> Vec<&str> {
    props
        .iter()
        .enumerate()
        .filter(|(i, _)| letter & (1 << i) != 0)
        .map(|(_, p)| p.as_str())
        .collect()
}

/// Contents of `{a, b}` starting at the head of `s`, and the rest.
fn braces(line: usize, s: &str) -> Result<(Vec<&str>, &str), FormatError> {
    let s = s.trim_start();
    let body = s.strip_prefix('{').ok_or_else(|| syntax(line, "expected `{`"))?;
    let end = body.find('}').ok_or_else(|| syntax(line, "unclosed `{`"))?;
    let items = body[..end]
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    Ok((items, &body[end + 1..]))
}

pub fn parse_model(text: &str) -> Result<LabeledModel, FormatError> {
    let mut mode = Mode::Mdp;
    let mut builder: Option<ModelBuilder> = None;
    let mut props: Vec<String> = Vec::new();
    let mut labeled = false;
    for (ln, l) in lines(text) {
        let mut toks = l.split_whitespace();
        let head = toks.next().unwrap_or("");
        if head != "mode" && head != "states" && builder.is_none() {
            return Err(syntax(ln, format!("`{head}` before `states`")));
        }
        match head {
            "mode" => {
                if builder.is_some() {
                    return Err(syntax(ln, "`mode` must precede `states`"));
                }
                mode = match toks.next() {
                    Some("mdp") => Mode::Mdp,
                    Some("nts") => Mode::Nts,
                    other => return Err(syntax(ln, format!("unknown mode `{}`", other.unwrap_or("")))),
                };
            }
            "states" => {
                if builder.is_some() {
                    return Err(syntax(ln, "duplicate `states`"));
                }
                let n: usize = number(ln, toks.next(), "state count")?;
                if n == 0 {
                    return Err(syntax(ln, "a model needs at least one state"));
                }
                builder = Some(ModelBuilder::new(mode, n));
            }
            "initial" => {
                let b = builder.as_mut().unwrap();
                let s = state(ln, toks.next(), b.num_states())?;
                b.initial(s);
            }
            "props" => {
                if labeled {
                    return Err(syntax(ln, "`props` must precede labels"));
                }
                props = toks.map(String::from).collect();
                builder.as_mut().unwrap().props(props.iter().cloned());
            }
            "actions" => {
                let b = builder.as_mut().unwrap();
                for a in toks.by_ref() {
                    b.action(a);
                }
            }
            "name" => {
                let b = builder.as_mut().unwrap();
                let s = state(ln, toks.next(), b.num_states())?;
                let name: Vec<&str> = toks.collect();
                if name.is_empty() {
                    return Err(syntax(ln, "expected a name"));
                }
                b.state_name(s, name.join(" "));
            }
            "label" => {
                let rest = l["label".len()..].trim();
                let (s, names) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(ln, "expected `label <state>: <props>`"))?;
                let b = builder.as_mut().unwrap();
                let s = state(ln, Some(s.trim()), b.num_states())?;
                let names: Vec<&str> = names.split_whitespace().collect();
                let letter = letter_of(ln, &props, &names)?;
                b.label(s, letter);
                labeled = true;
            }
            "trans" => {
                let b = builder.as_mut().unwrap();
                let n = b.num_states();
                let from = state(ln, toks.next(), n)?;
                let action = toks.next().ok_or_else(|| syntax(ln, "expected an action"))?;
                let to = state(ln, toks.next(), n)?;
                let w: f64 = number(ln, toks.next(), "weight")?;
                if !w.is_finite() || w < 0.0 {
                    return Err(syntax(ln, format!("invalid weight {w}")));
                }
                let u = b.action(action);
                b.transition(from, u, to, w);
            }
            other => return Err(syntax(ln, format!("unknown directive `{other}`"))),
        }
        if toks_left(l, head) {
            return Err(syntax(ln, "trailing tokens"));
        }
    }
    Ok(builder.ok_or(FormatError::Missing("states"))?.build()?)
}

/// Arity check for the fixed-width directives.
fn toks_left(l: &str, head: &str) -> bool {
    let n = l.split_whitespace().count();
    match head {
        "mode" | "states" | "initial" => n > 2,
        "trans" => n > 5,
        _ => false,
    }
}

pub fn write_model(m: &LabeledModel) -> String {
    let mut out = String::new();
    let mode = match m.mode() {
        Mode::Mdp => "mdp",
        Mode::Nts => "nts",
    };
    let _ = writeln!(out, "mode {mode}");
    let _ = writeln!(out, "states {}", m.num_states());
    let _ = writeln!(out, "initial {}", m.initial());
    if !m.props().is_empty() {
        let _ = writeln!(out, "props {}", m.props().join(" "));
    }
    if !m.actions().is_empty() {
        let _ = writeln!(out, "actions {}", m.actions().join(" "));
    }
    for s in 0..m.num_states() {
        let name = m.state_name(s);
        if name != s.to_string() && !name.trim().is_empty() {
            let _ = writeln!(
                out,
                "name {s} {}",
                name.split_whitespace().collect::<Vec<_>>().join(" ")
            );
        }
    }
    for s in 0..m.num_states() {
        if m.label(s) != 0 {
            let _ = writeln!(out, "label {s}: {}", letter_names(m.props(), m.label(s)).join(" "));
        }
    }
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            let a = m.action_name(c.action);
            if c.successors.is_empty() {
                let _ = writeln!(out, "trans {s} {a} {s} 0");
            }
            for &(t, w) in &c.successors {
                let _ = writeln!(out, "trans {s} {a} {t} {w}");
            }
        }
    }
    out
}

pub fn parse_dra(text: &str) -> Result<RabinAutomaton, FormatError> {
    let mut n: Option<usize> = None;
    let mut initial = 0;
    let mut props: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, StateId, Option<Vec<String>>, StateId)> = Vec::new();
    let mut pairs: Vec<(Vec<StateId>, Vec<StateId>)> = Vec::new();
    for (ln, l) in lines(text) {
        let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        if head != "states" && n.is_none() {
            return Err(syntax(ln, format!("`{head}` before `states`")));
        }
        match head {
            "states" => {
                if n.is_some() {
                    return Err(syntax(ln, "duplicate `states`"));
                }
                let k: usize = number(ln, Some(rest), "state count")?;
                if k == 0 {
                    return Err(syntax(ln, "an automaton needs at least one state"));
                }
                n = Some(k);
            }
            "initial" => initial = state(ln, Some(rest), n.unwrap())?,
            "props" => {
                if !edges.is_empty() {
                    return Err(syntax(ln, "`props` must precede edges"));
                }
                props = rest.split_whitespace().map(String::from).collect();
            }
            "edge" => {
                let (from, rest) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax(ln, "expected `edge <s> <letter> <t>`"))?;
                let from = state(ln, Some(from), n.unwrap())?;
                let rest = rest.trim_start();
                let (letter, rest) = if let Some(r) = rest.strip_prefix("else") {
                    (None, r)
                } else {
                    let (items, r) = braces(ln, rest)?;
                    (Some(items.into_iter().map(String::from).collect()), r)
                };
                let to = state(ln, Some(rest.trim()), n.unwrap())?;
                edges.push((ln, from, letter, to));
            }
            "pair" => {
                let r = rest
                    .strip_prefix("L=")
                    .ok_or_else(|| syntax(ln, "expected `pair L={..} K={..}`"))?;
                let (avoid, r) = braces(ln, r)?;
                let r = r
                    .trim_start()
                    .strip_prefix("K=")
                    .ok_or_else(|| syntax(ln, "expected `K={..}`"))?;
                let (accept, r) = braces(ln, r)?;
                if !r.trim().is_empty() {
                    return Err(syntax(ln, "trailing tokens"));
                }
                let ids = |v: Vec<&str>| -> Result<Vec<StateId>, FormatError> {
                    v.into_iter().map(|t| state(ln, Some(t), n.unwrap())).collect()
                };
                pairs.push((ids(avoid)?, ids(accept)?));
            }
            other => return Err(syntax(ln, format!("unknown directive `{other}`"))),
        }
    }
    let n = n.ok_or(FormatError::Missing("states"))?;
    let mut b = RabinBuilder::new(n, props.iter().cloned());
    b.initial(initial);
    for (ln, from, letter, to) in edges {
        match letter {
            None => b.default_edge(from, to),
            Some(names) => {
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                b.edge(from, letter_of(ln, &props, &names)?, to)
            }
        };
    }
    for (avoid, accept) in pairs {
        b.pair(avoid, accept);
    }
    Ok(b.build()?)
}

/// Every letter written out explicitly.
pub fn write_dra(r: &RabinAutomaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", r.num_states());
    let _ = writeln!(out, "initial {}", r.initial());
    let _ = writeln!(out, "props {}", r.props().join(" "));
    for s in 0..r.num_states() {
        for l in 0..r.num_letters() as Letter {
            let _ = writeln!(
                out,
                "edge {s} {{{}}} {}",
                letter_names(r.props(), l).join(","),
                r.step(s, l)
            );
        }
    }
    let join = |v: &[StateId]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
    for p in r.pairs() {
        let _ = writeln!(out, "pair L={{{}}} K={{{}}}", join(&p.avoid), join(&p.accept));
    }
    out
}

/// Tab-separated `state  name  action  probability`, one row per action
/// with positive probability.
pub fn write_policy(m: &LabeledModel, pol: &StationaryPolicy) -> String {
    let mut out = String::from("state\tname\taction\tprobability\n");
    for s in 0..pol.num_states() {
        for &(u, p) in pol.distribution(s) {
            if p > 0.0 {
                let _ = writeln!(out, "{s}\t{}\t{}\t{p}", m.state_name(s), m.action_name(u));
            }
        }
    }
    out
}

/// Reads a table written by [`write_policy`] against the model it was
/// written for. States missing from the table are left undefined.
pub fn parse_policy(m: &LabeledModel, text: &str) -> Result<StationaryPolicy, FormatError> {
    let mut table: Vec<Vec<(tlac_core::ActionId, f64)>> = vec![Vec::new(); m.num_states()];
    for (ln, l) in text.lines().enumerate().skip(1) {
        let ln = ln + 1;
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 4 {
            return Err(syntax(ln, "expected four tab-separated columns"));
        }
        let s = state(ln, Some(cols[0]), m.num_states())?;
        let u = m
            .action_id(cols[2])
            .ok_or_else(|| syntax(ln, format!("unknown action `{}`", cols[2])))?;
        let p: f64 = number(ln, Some(cols[3]), "probability")?;
        table[s].push((u, p));
    }
    Ok(StationaryPolicy::new(m, table)?)
}

/// `state,name,value` rows.
pub fn write_values(m: &LabeledModel, values: &[f64]) -> String {
    let mut out = String::from("state,name,value\n");
    for (s, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{s},\"{}\",{v}", m.state_name(s).replace('"', "'"));
    }
    out
}

pub const TRACE_HEADER: &str = "k,theta1,theta2,r1,r2,cost,episodes,pairs,exact";

pub fn write_trace(records: &[IterationRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let exact = r.exact.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k, r.theta[0], r.theta[1], r.r[0], r.r[1], r.cost, r.episodes, r.pairs, exact
        );
    }
    out
}
