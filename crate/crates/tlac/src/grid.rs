//! Road-network grid world.
//!
//! A map is an ASCII grid of walls (`#`), free cells (`.`) and lettered free
//! cells whose letters are bound to observations in a legend:
//!
//! ```text
//! props VD RD Up Ri Un
//! grid
//! #######
//! #..U..#
//! #.###.#
//! #..V..#
//! #######
//! end
//! legend U Up
//! legend V VD
//! start 1 1 S
//! ```
//!
//! A free cell with three or more free neighbours is an intersection; the
//! remaining free cells split into corridors (connected runs, bends
//! included). The robot state is the pair `(previous region, current
//! region)`, so the heading at an intersection is known. In a corridor the
//! only primitive is `FollowRoad`; at an intersection the robot may try
//! `GoLeft`, `GoRight` or `GoStraight` for each exit that exists. An attempt
//! succeeds with probability `success`; otherwise one of the other forward
//! exits is taken uniformly at random. Turning back is never possible at an
//! intersection, and `FollowRoad` at a dead end turns the robot around.
//!
//! `start r c D` places the robot at the intersection cell `(r, c)` having
//! entered it through its `D` arm (`N`, `E`, `S` or `W`).

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlac_core::{ActionId, LabeledModel, Letter, Mode, ModelBuilder, ProviderError, StateId, TransitionSource};

pub const FOLLOW_ROAD: &str = "FollowRoad";
pub const GO_LEFT: &str = "GoLeft";
pub const GO_RIGHT: &str = "GoRight";
pub const GO_STRAIGHT: &str = "GoStraight";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("map has no grid section")]
    NoGrid,
    #[error("grid rows have different widths")]
    Ragged,
    #[error("letter `{0}` in the grid has no legend entry")]
    UnboundLetter(char),
    #[error("intersections at {0:?} and {1:?} touch without a corridor between them")]
    AdjacentIntersections((usize, usize), (usize, usize)),
    #[error("corridor at {0:?} meets the same intersection twice")]
    Loop((usize, usize)),
    #[error("start cell {0:?} is not an intersection")]
    StartNotIntersection((usize, usize)),
    #[error("start intersection has no corridor on its {0} arm")]
    StartArm(char),
    #[error("missing `start` line")]
    NoStart,
    #[error("more than 16 observations")]
    TooManyProps,
}

/// Compass directions, clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Dir {
        Dir::ALL[i % 4]
    }

    pub fn opposite(self) -> Dir {
        Dir::from_index(self.index() + 2)
    }

    pub fn left(self) -> Dir {
        Dir::from_index(self.index() + 3)
    }

    pub fn right(self) -> Dir {
        Dir::from_index(self.index() + 1)
    }

    fn step(self, (r, c): (usize, usize)) -> Option<(usize, usize)> {
        Some(match self {
            Dir::N => (r.checked_sub(1)?, c),
            Dir::E => (r, c + 1),
            Dir::S => (r + 1, c),
            Dir::W => (r, c.checked_sub(1)?),
        })
    }

    fn parse(s: &str) -> Option<Dir> {
        match s {
            "N" => Some(Dir::N),
            "E" => Some(Dir::E),
            "S" => Some(Dir::S),
            "W" => Some(Dir::W),
            _ => None,
        }
    }

    fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

/// Parsed map file.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    pub rows: Vec<Vec<char>>,
    pub props: Vec<String>,
    pub legend: BTreeMap<char, Vec<String>>,
    pub start: ((usize, usize), Dir),
}

impl GridMap {
    pub fn parse(text: &str) -> Result<GridMap, MapError> {
        let err = |line: usize, m: &str| MapError::Syntax {
            line,
            message: m.to_string(),
        };
        let mut rows: Vec<Vec<char>> = Vec::new();
        let mut in_grid = false;
        let mut seen_grid = false;
        let mut props: Vec<String> = Vec::new();
        let mut legend: BTreeMap<char, Vec<String>> = BTreeMap::new();
        let mut start = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if in_grid {
                let l = raw.trim();
                if l == "end" {
                    in_grid = false;
                } else if !l.is_empty() {
                    if let Some(bad) = l.chars().find(|&c| c != '#' && c != '.' && !c.is_ascii_alphabetic()) {
                        return Err(err(line, &format!("unexpected grid character `{bad}`")));
                    }
                    rows.push(l.chars().collect());
                }
                continue;
            }
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0] {
                "grid" if toks.len() == 1 && !seen_grid => {
                    in_grid = true;
                    seen_grid = true;
                }
                "props" => props = toks[1..].iter().map(|s| s.to_string()).collect(),
                "legend" if toks.len() >= 2 => {
                    let mut ch = toks[1].chars();
                    let c = match (ch.next(), ch.next()) {
                        (Some(c), None) if c.is_ascii_alphabetic() => c,
                        _ => return Err(err(line, "legend key must be a single letter")),
                    };
                    legend.insert(c, toks[2..].iter().map(|s| s.to_string()).collect());
                }
                "start" if toks.len() == 4 => {
                    let r = toks[1].parse().map_err(|_| err(line, "invalid start row"))?;
                    let c = toks[2].parse().map_err(|_| err(line, "invalid start column"))?;
                    let d = Dir::parse(toks[3]).ok_or_else(|| err(line, "direction must be N, E, S or W"))?;
                    start = Some(((r, c), d));
                }
                _ => return Err(err(line, &format!("cannot parse `{l}`"))),
            }
        }
        if !seen_grid || rows.is_empty() {
            return Err(MapError::NoGrid);
        }
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(MapError::Ragged);
        }
        for obs in legend.values() {
            for o in obs {
                if !props.contains(o) {
                    props.push(o.clone());
                }
            }
        }
        if props.len() > 16 {
            return Err(MapError::TooManyProps);
        }
        for row in &rows {
            for &c in row {
                if c.is_ascii_alphabetic() && !legend.contains_key(&c) {
                    return Err(MapError::UnboundLetter(c));
                }
            }
        }
        Ok(GridMap {
            rows,
            props,
            legend,
            start: start.ok_or(MapError::NoStart)?,
        })
    }

    fn open(&self, (r, c): (usize, usize)) -> bool {
        self.rows.get(r).and_then(|row| row.get(c)).is_some_and(|&ch| ch != '#')
    }

    fn neighbours(&self, cell: (usize, usize)) -> impl Iterator<Item = (Dir, (usize, usize))> + '_ {
        Dir::ALL
            .into_iter()
            .filter_map(move |d| d.step(cell).filter(|&n| self.open(n)).map(|n| (d, n)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// Corridor region by arm of the intersection, if any.
    Intersection { arms: [Option<usize>; 4] },
    /// Intersections at the ends, with the arm each end attaches to.
    Corridor { ends: Vec<(usize, Dir)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub cells: Vec<(usize, usize)>,
    pub label: Letter,
}

impl Region {
    pub fn name(&self, id: usize) -> String {
        let (r, c) = self.cells[0];
        match self.kind {
            RegionKind::Intersection { .. } => format!("I{id}@{r}:{c}"),
            RegionKind::Corridor { .. } => format!("C{id}@{r}:{c}"),
        }
    }
}

/// Where a failed turn primitive sends the robot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Confusion {
    /// Any other forward exit, uniformly.
    #[default]
    Uniform,
    /// A forward exit next to the intended one (a missed left turn goes
    /// straight, a veering straight run turns left or right), uniformly;
    /// any other exit when the intended one has no such neighbour.
    ///
    /// Unlike `Uniform`, this keeps the possible outcomes of the primitives
    /// at a four-way intersection distinct.
    Adjacent,
}

/// Intersection-level noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise {
    /// Probability that a turn primitive takes the intended exit.
    pub success: f64,
    pub confusion: Confusion,
    /// When positive, probabilities are replaced by frequencies of this many
    /// simulated attempts.
    pub samples: usize,
    /// Seed of the simulated attempts.
    pub seed: u64,
}

impl Default for Noise {
    fn default() -> Self {
        Noise {
            success: 0.9,
            confusion: Confusion::Uniform,
            samples: 0,
            seed: 0,
        }
    }
}

/// Regions, pair states and primitive outcomes.
#[derive(Clone, Debug)]
struct Layout {
    regions: Vec<Region>,
    /// `(previous, current)` region per state.
    pairs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), StateId>,
    follow: ActionId,
    turns: [ActionId; 3],
}

impl Layout {
    /// Enabled primitives at `s` with their successor distributions when a
    /// turn succeeds with probability `success`.
    fn outcomes(&self, s: StateId, success: f64, confusion: Confusion) -> Vec<(ActionId, Vec<(StateId, f64)>)> {
        let (prev, cur) = self.pairs[s];
        match &self.regions[cur].kind {
            RegionKind::Corridor { ends } => {
                let next = ends.iter().map(|e| e.0).find(|&i| i != prev).unwrap_or(prev);
                vec![(self.follow, vec![(self.index[&(cur, next)], 1.0)])]
            }
            RegionKind::Intersection { arms } => {
                let entered = arms
                    .iter()
                    .position(|a| *a == Some(prev))
                    .map(Dir::from_index)
                    .expect("corridor attaches to an arm");
                let heading = entered.opposite();
                // Exits with their direction, left to right.
                let exits: Vec<(ActionId, Dir, usize)> = [heading.left(), heading, heading.right()]
                    .into_iter()
                    .zip([self.turns[0], self.turns[2], self.turns[1]])
                    .filter_map(|(d, u)| arms[d.index()].map(|c| (u, d, c)))
                    .collect();
                let mut out: Vec<(ActionId, Vec<(StateId, f64)>)> = exits
                    .iter()
                    .map(|&(u, d, target)| {
                        let mut wrong: Vec<usize> = exits
                            .iter()
                            .filter(|e| e.2 != target)
                            .filter(|e| confusion == Confusion::Uniform || e.1 == d.left() || e.1 == d.right())
                            .map(|e| e.2)
                            .collect();
                        if wrong.is_empty() {
                            wrong = exits.iter().filter(|e| e.2 != target).map(|e| e.2).collect();
                        }
                        let mut row = vec![(self.index[&(cur, target)], success)];
                        let w = (1.0 - success) / wrong.len() as f64;
                        row.extend(wrong.into_iter().map(|c| (self.index[&(cur, c)], w)));
                        row.retain(|&(_, w)| w > 0.0);
                        (u, row)
                    })
                    .collect();
                out.sort_by_key(|e| e.0);
                out
            }
        }
    }

    /// `P(s, u, ·)` under `noise`, sorted by successor.
    fn distribution(&self, s: StateId, u: ActionId, noise: &Noise) -> Option<Vec<(StateId, f64)>> {
        let (_, mut row) = self
            .outcomes(s, noise.success, noise.confusion)
            .into_iter()
            .find(|x| x.0 == u)?;
        if noise.samples > 0 {
            row = simulate(&row, noise, s, u);
        }
        row.sort_by_key(|e| e.0);
        Some(row)
    }
}

/// Regions and the pair-state transition system of a map.
#[derive(Clone, Debug)]
pub struct GridEnv {
    layout: Layout,
    noise: Noise,
    nts: LabeledModel,
}

impl GridEnv {
    pub fn new(map: &GridMap, noise: Noise) -> Result<GridEnv, MapError> {
        let regions = segment(map)?;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (id, reg) in regions.iter().enumerate() {
            if let RegionKind::Corridor { ends } = &reg.kind {
                for &(i, _) in ends {
                    pairs.push((i, id));
                    pairs.push((id, i));
                }
            }
        }
        pairs.sort_unstable();
        let index: HashMap<(usize, usize), StateId> = pairs.iter().enumerate().map(|(s, &p)| (p, s)).collect();

        let (cell, arm) = map.start;
        let start_region = regions
            .iter()
            .position(|r| matches!(r.kind, RegionKind::Intersection { .. }) && r.cells[0] == cell)
            .ok_or(MapError::StartNotIntersection(cell))?;
        let RegionKind::Intersection { arms } = &regions[start_region].kind else {
            unreachable!()
        };
        let via = arms[arm.index()].ok_or(MapError::StartArm(arm.letter()))?;

        let mut b = ModelBuilder::new(Mode::Nts, pairs.len());
        b.props(map.props.iter().cloned());
        let follow = b.action(FOLLOW_ROAD);
        let turns = [b.action(GO_LEFT), b.action(GO_RIGHT), b.action(GO_STRAIGHT)];
        b.initial(index[&(via, start_region)]);
        let layout = Layout {
            regions,
            pairs,
            index,
            follow,
            turns,
        };
        for s in 0..layout.pairs.len() {
            let (prev, cur) = layout.pairs[s];
            let regs = &layout.regions;
            b.state_name(s, format!("{}>{}", regs[prev].name(prev), regs[cur].name(cur)));
            b.label(s, regs[cur].label);
            // Any value strictly between 0 and 1 exposes every possible exit.
            for (u, row) in layout.outcomes(s, 0.5, noise.confusion) {
                for (t, _) in row {
                    b.transition(s, u, t, 1.0);
                }
            }
        }
        let nts = b.build().expect("pair-state system is well formed");
        Ok(GridEnv { layout, noise, nts })
    }

    pub fn regions(&self) -> &[Region] {
        &self.layout.regions
    }

    pub fn pair(&self, s: StateId) -> (usize, usize) {
        self.layout.pairs[s]
    }

    pub fn num_states(&self) -> usize {
        self.layout.pairs.len()
    }

    /// The transition system: which successors are possible, not how likely.
    pub fn nts(&self) -> &LabeledModel {
        &self.nts
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    /// `P(s, u, ·)`, sorted by successor.
    pub fn distribution(&self, s: StateId, u: ActionId) -> Option<Vec<(StateId, f64)>> {
        self.layout.distribution(s, u, &self.noise)
    }

    /// The full MDP; used only for exact evaluation.
    pub fn mdp(&self) -> LabeledModel {
        let m = &self.nts;
        let mut b = ModelBuilder::new(Mode::Mdp, m.num_states());
        b.props(m.props().iter().cloned());
        for a in m.actions() {
            b.action(a);
        }
        b.initial(m.initial());
        for s in 0..m.num_states() {
            b.state_name(s, m.state_name(s));
            b.label(s, m.label(s));
            for c in m.choices(s) {
                for (t, w) in self.distribution(s, c.action).expect("enabled") {
                    b.transition(s, c.action, t, w);
                }
            }
        }
        b.build().expect("rows are stochastic")
    }
}

/// Empirical frequencies of `noise.samples` draws from `row`. The draws for
/// a pair depend only on the pair and the seed, never on query order.
fn simulate(row: &[(StateId, f64)], noise: &Noise, s: StateId, u: ActionId) -> Vec<(StateId, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed ^ ((s as u64) << 8) ^ u as u64 ^ 0x5eed_0000_0000);
    let mut counts = vec![0usize; row.len()];
    for _ in 0..noise.samples {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = row.len() - 1;
        for (i, &(_, w)) in row.iter().enumerate() {
            acc += w;
            if x < acc {
                pick = i;
                break;
            }
        }
        counts[pick] += 1;
    }
    row.iter()
        .zip(counts)
        .filter(|&(_, k)| k > 0)
        .map(|(&(t, _), k)| (t, k as f64 / noise.samples as f64))
        .collect()
}

/// Splits the free cells into intersections and corridors.
fn segment(map: &GridMap) -> Result<Vec<Region>, MapError> {
    let h = map.rows.len();
    let w = map.rows[0].len();
    let cells = (0..h).flat_map(|r| (0..w).map(move |c| (r, c)));
    let is_int = |cell| map.neighbours(cell).count() >= 3;

    let mut region_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut regions: Vec<Region> = Vec::new();
    for cell in cells.clone().filter(|&c| map.open(c) && is_int(c)) {
        for (_, n) in map.neighbours(cell) {
            if is_int(n) {
                return Err(MapError::AdjacentIntersections(cell, n));
            }
        }
        region_of.insert(cell, regions.len());
        regions.push(Region {
            kind: RegionKind::Intersection { arms: [None; 4] },
            cells: vec![cell],
            label: 0,
        });
    }
    for cell in cells.filter(|&c| map.open(c)) {
        if region_of.contains_key(&cell) {
            continue;
        }
        let id = regions.len();
        let mut stack = vec![cell];
        let mut members = Vec::new();
        region_of.insert(cell, id);
        while let Some(x) = stack.pop() {
            members.push(x);
            for (_, n) in map.neighbours(x) {
                if !is_int(n) && !region_of.contains_key(&n) {
                    region_of.insert(n, id);
                    stack.push(n);
                }
            }
        }
        members.sort_unstable();
        regions.push(Region {
            kind: RegionKind::Corridor { ends: Vec::new() },
            cells: members,
            label: 0,
        });
    }
    // Attach corridors to intersection arms.
    let n_int = regions
        .iter()
        .take_while(|r| matches!(r.kind, RegionKind::Intersection { .. }))
        .count();
    for i in 0..n_int {
        let cell = regions[i].cells[0];
        for (d, n) in map.neighbours(cell) {
            let c = region_of[&n];
            if let RegionKind::Intersection { arms } = &mut regions[i].kind {
                arms[d.index()] = Some(c);
            }
            if let RegionKind::Corridor { ends } = &mut regions[c].kind {
                if ends.iter().any(|e| e.0 == i) {
                    return Err(MapError::Loop(regions[c].cells[0]));
                }
                ends.push((i, d));
            }
        }
    }
    for reg in &mut regions {
        for &(r, c) in &reg.cells {
            if let Some(obs) = map.legend.get(&map.rows[r][c]) {
                for o in obs {
                    let bit = map
                        .props
                        .iter()
                        .position(|p| p == o)
                        .expect("legend props are collected");
                    reg.label |= 1 << bit;
                }
            }
        }
    }
    Ok(regions)
}

/// Memoizing probability oracle for the grid that counts how many distinct
/// `(state, action)` pairs were ever requested.
pub struct GridSource<'a> {
    env: &'a GridEnv,
    memo: Mutex<HashMap<(StateId, ActionId), Vec<(StateId, f64)>>>,
    computed: AtomicUsize,
}

impl<'a> GridSource<'a> {
    pub fn new(env: &'a GridEnv) -> Self {
        GridSource {
            env,
            memo: Mutex::new(HashMap::new()),
            computed: AtomicUsize::new(0),
        }
    }

    /// Distinct pairs computed so far.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }
}

impl TransitionSource for GridSource<'_> {
    fn transition(&self, q: StateId, u: ActionId) -> Result<Vec<(StateId, f64)>, ProviderError> {
        let mut memo = self.memo.lock().map_err(|e| ProviderError::Failed(e.to_string()))?;
        if let Some(row) = memo.get(&(q, u)) {
            return Ok(row.clone());
        }
        if q >= self.env.num_states() || !self.env.nts.is_enabled(q, u) {
            return Err(ProviderError::NotEnabled { state: q, action: u });
        }
        let row = self.env.distribution(q, u).expect("enabled primitive has outcomes");
        memo.insert((q, u), row.clone());
        self.computed.fetch_add(1, Ordering::Relaxed);
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A ring of four corridors around four 3-way intersections, each with a
    /// dead-end stub pointing outwards.
    const RING: &str = "\
props A
grid
###.###
#.....#
#.###.#
..#A#..
#.###.#
#.....#
###.###
end
legend A A
start 1 3 W
";

    fn ring() -> GridEnv {
        GridEnv::new(&GridMap::parse(RING).unwrap(), Noise::default()).unwrap()
    }

    #[test]
    fn directions_rotate() {
        for d in Dir::ALL {
            assert_eq!(d.left().right(), d);
            assert_eq!(d.opposite().opposite(), d);
            assert_eq!(d.left().left(), d.opposite());
        }
        assert_eq!(Dir::N.left(), Dir::W);
        assert_eq!(Dir::N.right(), Dir::E);
    }

    #[test]
    fn segments_the_ring() {
        let env = ring();
        let ints = env
            .regions()
            .iter()
            .filter(|r| matches!(r.kind, RegionKind::Intersection { .. }))
            .count();
        assert_eq!(ints, 4);
        // Four bent corridors, four stubs and the isolated labelled cell.
        assert_eq!(env.regions().len() - ints, 9);
        // Each stub contributes 2 pair states, each ring corridor 4.
        assert_eq!(env.num_states(), 4 * 2 + 4 * 4);
    }

    #[test]
    fn rows_are_stochastic_and_match_the_support() {
        let env = ring();
        let m = env.mdp();
        for s in 0..m.num_states() {
            for c in m.choices(s) {
                let total: f64 = c.successors.iter().map(|e| e.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
                let support: Vec<_> = env.nts().successors(s, c.action).unwrap().iter().map(|e| e.0).collect();
                for &(t, _) in &c.successors {
                    assert!(support.contains(&t));
                }
            }
        }
    }

    #[test]
    fn three_way_turns_split_the_error() {
        let env = ring();
        let m = env.mdp();
        let s = m.initial();
        // Entered from the west at a 3-way intersection: left and straight
        // exist only if the arms do; each has two options.
        for c in m.choices(s) {
            let mut ws: Vec<f64> = c.successors.iter().map(|e| e.1).collect();
            ws.sort_by(f64::total_cmp);
            assert_eq!(ws.len(), 2);
            assert!((ws[0] - 0.1).abs() < 1e-12 && (ws[1] - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn dead_ends_turn_around() {
        let env = ring();
        let m = env.nts();
        let follow = m.action_id(FOLLOW_ROAD).unwrap();
        for s in 0..env.num_states() {
            let (prev, cur) = env.pair(s);
            if let RegionKind::Corridor { ends } = &env.regions()[cur].kind {
                let succ = m.successors(s, follow).unwrap();
                assert_eq!(succ.len(), 1);
                let (p2, c2) = env.pair(succ[0].0);
                assert_eq!(p2, cur);
                if ends.len() == 1 {
                    assert_eq!(c2, prev);
                } else {
                    assert_ne!(c2, prev);
                }
            }
        }
    }

    #[test]
    fn source_counts_distinct_pairs() {
        let env = ring();
        let src = GridSource::new(&env);
        let s = env.nts().initial();
        let u = env.nts().choices(s)[0].action;
        let a = src.transition(s, u).unwrap();
        let b = src.transition(s, u).unwrap();
        assert_eq!(a, b);
        assert_eq!(src.computed(), 1);
        assert_eq!(Some(a), env.distribution(s, u));
    }

    #[test]
    fn monte_carlo_rows_are_frequencies() {
        let noise = Noise {
            samples: 1000,
            seed: 3,
            ..Noise::default()
        };
        let env = GridEnv::new(&GridMap::parse(RING).unwrap(), noise).unwrap();
        let s = env.nts().initial();
        let u = env.nts().choices(s)[0].action;
        let row = env.distribution(s, u).unwrap();
        let total: f64 = row.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(row, env.distribution(s, u).unwrap());
        let hi = row.iter().map(|e| e.1).fold(0.0, f64::max);
        // 0.9 within five standard deviations of 1000 draws.
        assert!((hi - 0.9).abs() < 5.0 * (0.09f64 / 1000.0).sqrt());
    }

    /// A plus-shaped 4-way intersection with stubs on every arm.
    const PLUS: &str = "grid\n#.#\n...\n#.#\nend\nstart 1 1 S\n";

    fn plus_rows(confusion: Confusion) -> Vec<(String, Vec<f64>)> {
        let noise = Noise {
            confusion,
            ..Noise::default()
        };
        let env = GridEnv::new(&GridMap::parse(PLUS).unwrap(), noise).unwrap();
        let m = env.nts();
        let s = m.initial();
        let mut out = Vec::new();
        for c in m.choices(s) {
            let row = env.distribution(s, c.action).unwrap();
            let mut ws: Vec<f64> = row.iter().map(|e| e.1).collect();
            ws.sort_by(|a, b| b.total_cmp(a));
            assert_eq!(row.len(), c.successors.len());
            out.push((m.action_name(c.action).to_string(), ws));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn four_way_uniform_confusion() {
        let rows = plus_rows(Confusion::Uniform);
        assert_eq!(rows.len(), 3);
        for (_, ws) in rows {
            assert_eq!(ws.len(), 3);
            assert!((ws[0] - 0.9).abs() < 1e-12);
            assert!((ws[1] - 0.05).abs() < 1e-12 && (ws[2] - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn four_way_adjacent_confusion() {
        let rows = plus_rows(Confusion::Adjacent);
        let get = |n: &str| rows.iter().find(|r| r.0 == n).unwrap().1.clone();
        assert_eq!(get(GO_LEFT).len(), 2);
        assert!((get(GO_LEFT)[1] - 0.1).abs() < 1e-12);
        assert_eq!(get(GO_RIGHT).len(), 2);
        let straight = get(GO_STRAIGHT);
        assert_eq!(straight.len(), 3);
        assert!((straight[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_maps() {
        let adjacent = "grid\n...\n...\n...\nend\nstart 1 1 N\n";
        assert!(matches!(
            GridMap::parse(adjacent).and_then(|m| GridEnv::new(&m, Noise::default())),
            Err(MapError::AdjacentIntersections(..))
        ));
        assert_eq!(GridMap::parse("grid\n..\n.\nend\nstart 0 0 N\n"), Err(MapError::Ragged));
        assert_eq!(
            GridMap::parse("grid\n.X\nend\nstart 0 0 N\n"),
            Err(MapError::UnboundLetter('X'))
        );
        assert_eq!(GridMap::parse("props A\n"), Err(MapError::NoGrid));
        let no_arm = RING.replace("start 1 3 W", "start 1 3 S");
        assert_eq!(
            GridEnv::new(&GridMap::parse(&no_arm).unwrap(), Noise::default()).err(),
            Some(MapError::StartArm('S'))
        );
    }
}
