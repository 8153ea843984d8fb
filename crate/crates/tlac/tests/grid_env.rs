//! Grid environment on the shipped desk map and random label placements.

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use tlac::grid::{Confusion, GridEnv, GridMap, Noise, RegionKind};
use tlac_core::{Mode, StateId};

fn desk_text() -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/desk.map");
    std::fs::read_to_string(path).unwrap()
}

fn env(text: &str, noise: Noise) -> GridEnv {
    GridEnv::new(&GridMap::parse(text).unwrap(), noise).unwrap()
}

fn nts_support(e: &GridEnv, s: StateId, u: usize) -> BTreeSet<StateId> {
    e.nts().successors(s, u).unwrap().iter().map(|&(t, _)| t).collect()
}

/// Every enabled pair: positive outcomes are exactly the possible ones and
/// the row sums to one.
fn assert_consistent(e: &GridEnv, exact_support: bool) {
    let m = e.nts();
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            let row = e.distribution(s, c.action).expect("enabled pair has outcomes");
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() <= 1e-12, "row ({s}, {}) sums to {total}", c.action);
            let positive: BTreeSet<StateId> = row.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t).collect();
            let possible = nts_support(e, s, c.action);
            if exact_support {
                assert_eq!(positive, possible, "support of ({s}, {})", c.action);
            } else {
                assert!(positive.is_subset(&possible), "support of ({s}, {})", c.action);
            }
        }
    }
}

#[test]
fn desk_supports_match_the_transition_system() {
    for confusion in [Confusion::Uniform, Confusion::Adjacent] {
        for success in [0.5, 0.75, 0.9, 0.99] {
            let e = env(
                &desk_text(),
                Noise {
                    success,
                    confusion,
                    ..Noise::default()
                },
            );
            assert_consistent(&e, true);
        }
        let e = env(
            &desk_text(),
            Noise {
                success: 1.0,
                confusion,
                ..Noise::default()
            },
        );
        assert_consistent(&e, false);
    }
}

#[test]
fn sampled_frequencies_stay_inside_the_support_and_near_the_truth() {
    let text = desk_text();
    let noise = Noise {
        confusion: Confusion::Adjacent,
        ..Noise::default()
    };
    let exact = env(&text, noise);
    let n = 4000;
    let sampled = env(
        &text,
        Noise {
            samples: n,
            seed: 9,
            ..noise
        },
    );
    assert_consistent(&sampled, false);
    let m = exact.nts();
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            let truth: HashMap<StateId, f64> = exact.distribution(s, c.action).unwrap().into_iter().collect();
            for (t, f) in sampled.distribution(s, c.action).unwrap() {
                let p = truth[&t];
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (f - p).abs() <= 5.0 * sigma + 1e-12,
                    "({s}, {}) -> {t}: {f} vs {p}",
                    c.action
                );
            }
        }
    }
}

/// Open cells of a map.
fn open_cells(map: &GridMap) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for (r, row) in map.rows.iter().enumerate() {
        for (c, &ch) in row.iter().enumerate() {
            if ch != '#' {
                out.insert((r, c));
            }
        }
    }
    out
}

fn neighbours((r, c): (usize, usize)) -> [(usize, usize); 4] {
    [(r.wrapping_sub(1), c), (r, c + 1), (r + 1, c), (r, c.wrapping_sub(1))]
}

#[test]
fn desk_regions_match_a_cell_count() {
    let map = GridMap::parse(&desk_text()).unwrap();
    let open = open_cells(&map);
    let degree = |x: (usize, usize)| neighbours(x).iter().filter(|n| open.contains(n)).count();
    let crossings: BTreeSet<_> = open.iter().copied().filter(|&x| degree(x) >= 3).collect();
    // Corridor components: open cells that are not crossings, joined by
    // adjacency.
    let mut seen = BTreeSet::new();
    let mut corridors = 0;
    for &x in &open {
        if crossings.contains(&x) || seen.contains(&x) {
            continue;
        }
        corridors += 1;
        let mut stack = vec![x];
        seen.insert(x);
        while let Some(y) = stack.pop() {
            for n in neighbours(y) {
                if open.contains(&n) && !crossings.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
    }
    assert_eq!(crossings.len(), 16);
    let e = env(&desk_text(), Noise::default());
    let regions = e.regions();
    let got_crossings = regions
        .iter()
        .filter(|r| matches!(r.kind, RegionKind::Intersection { .. }))
        .count();
    assert_eq!(got_crossings, crossings.len());
    assert_eq!(regions.len() - got_crossings, corridors);
    let covered: usize = regions.iter().map(|r| r.cells.len()).sum();
    assert_eq!(covered, open.len());

    // Pair states: previous and current regions are adjacent, or equal at a
    // dead end where the robot turned around.
    let region_of: HashMap<(usize, usize), usize> = regions
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.cells.iter().map(move |&c| (c, i)))
        .collect();
    let touching = |a: usize, b: usize| {
        regions[a]
            .cells
            .iter()
            .any(|&x| neighbours(x).iter().any(|n| region_of.get(n) == Some(&b)))
    };
    for s in 0..e.num_states() {
        let (prev, cur) = e.pair(s);
        assert!(prev == cur || touching(prev, cur), "state {s} pairs {prev} with {cur}");
    }
    assert_eq!(e.nts().mode(), Mode::Nts);
    assert_eq!(e.mdp().num_states(), e.num_states());
}

const LATTICE: [&str; 9] = [
    "##.#.#.#.##",
    "#.........#",
    "##.#.#.#.##",
    "#.........#",
    "##.#.#.#.##",
    "#.........#",
    "##.#.#.#.##",
    "#.........#",
    "##.#.#.#.##",
];

/// The desk lattice with the given corridor cells relabeled.
fn lattice(labels: &[((usize, usize), char)]) -> String {
    let mut rows: Vec<Vec<char>> = std::iter::once("###########")
        .chain(LATTICE)
        .chain(std::iter::once("###########"))
        .map(|r| r.chars().collect())
        .collect();
    for &((r, c), ch) in labels {
        rows[r][c] = ch;
    }
    let grid: Vec<String> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
    format!(
        "props A B\ngrid\n{}\nend\nlegend a A\nlegend b B\nstart 2 2 W\n",
        grid.join("\n")
    )
}

/// Corridor cells of the lattice: exactly one odd coordinate.
fn corridor_cell() -> impl Strategy<Value = (usize, usize)> {
    (1usize..10, 1usize..10).prop_filter("corridor", |&(r, c)| (r % 2 == 1) != (c % 2 == 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_labelings_stay_consistent(
        a in corridor_cell(),
        b in corridor_cell(),
        success in 0.3f64..0.99,
        adjacent in any::<bool>(),
    ) {
        let confusion = if adjacent { Confusion::Adjacent } else { Confusion::Uniform };
        let e = env(&lattice(&[(a, 'a'), (b, 'b')]), Noise { success, confusion, ..Noise::default() });
        assert_consistent(&e, true);
    }
}

fn cell((r, c): (usize, usize)) -> String {
    format!("{r}:{c}")
}

/// Regions keyed by their first cell, in a layout that does not depend on
/// internal numbering.
fn render(e: &GridEnv, props: &[String]) -> String {
    let regions = e.regions();
    let key = |i: usize| *regions[i].cells.iter().min().unwrap();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by_key(|&i| (matches!(regions[i].kind, RegionKind::Corridor { .. }), key(i)));
    let mut out = String::new();
    for i in order {
        let r = &regions[i];
        match &r.kind {
            RegionKind::Intersection { arms } => {
                out += &format!("I {}", cell(key(i)));
                for (d, arm) in ["N", "E", "S", "W"].iter().zip(arms) {
                    if let Some(a) = arm {
                        out += &format!(" {d}={}", cell(key(*a)));
                    }
                }
            }
            RegionKind::Corridor { ends } => {
                let mut cells = r.cells.clone();
                cells.sort();
                let cells: Vec<String> = cells.into_iter().map(cell).collect();
                let mut ends: Vec<((usize, usize), String)> =
                    ends.iter().map(|&(j, d)| (key(j), format!("{d:?}"))).collect();
                ends.sort();
                let ends: Vec<String> = ends.into_iter().map(|(k, d)| format!("{}/{d}", cell(k))).collect();
                let label: Vec<&str> = props
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| r.label & (1 << b) != 0)
                    .map(|(_, p)| p.as_str())
                    .collect();
                out += &format!(
                    "C {} cells={} ends={} label={}",
                    cell(key(i)),
                    cells.join(","),
                    ends.join(","),
                    label.join(",")
                );
            }
        }
        out.push('\n');
    }
    out
}

#[test]
fn ring_regions_match_the_hand_enumeration() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let map = GridMap::parse(&std::fs::read_to_string(dir.join("ring.map")).unwrap()).unwrap();
    let e = GridEnv::new(&map, Noise::default()).unwrap();
    let golden = std::fs::read_to_string(dir.join("ring.golden")).unwrap();
    assert_eq!(render(&e, &map.props), golden);

    // The successor's previous region is always the current region.
    let m = e.nts();
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            for &(t, _) in &c.successors {
                assert_eq!(e.pair(t).0, e.pair(s).1, "{s} -> {t}");
            }
        }
    }
}
