//! Independent adjudication oracle and the hand-written rule table.

#![allow(dead_code)]

use eqlearn::microdip::{adjudicate, is_valid_order, valid_orders, MapGraph, OrderKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Guess-and-check adjudicator: tries every success/failure assignment of
/// the moves and keeps the self-consistent one with the most successes.
pub fn oracle(units: &[Option<u8>], orders: &[Option<OrderKind>]) -> Vec<Option<u8>> {
    let n = units.len();
    let ord = |x: usize| units[x].and(orders[x]).unwrap_or(OrderKind::Hold);
    let dest = |x: usize| match ord(x) {
        OrderKind::Move(d) if units[x].is_some() => Some(d as usize),
        _ => None,
    };
    let movers: Vec<usize> = (0..n).filter(|&x| dest(x).is_some()).collect();
    let uncut = |x: usize, target: usize| {
        !(0..n).any(|a| dest(a) == Some(x) && a != target && units[a] != units[x])
    };
    let attack = |m: usize, exclude: Option<u8>| {
        let d = dest(m).unwrap();
        1 + (0..n)
            .filter(|&s| units[s].is_some() && units[s] != exclude)
            .filter(|&s| ord(s) == OrderKind::SupportMove(m as u8, d as u8) && uncut(s, d))
            .count()
    };
    let hold = |x: usize| {
        1 + (0..n)
            .filter(|&s| units[s].is_some())
            .filter(|&s| ord(s) == OrderKind::SupportHold(x as u8) && uncut(s, x))
            .count()
    };
    let mut best: Option<(usize, Vec<bool>)> = None;
    for mask in 0u32..(1 << movers.len()) {
        let succ = |x: usize| movers.iter().position(|&m| m == x).is_some_and(|i| mask >> i & 1 == 1);
        let consistent = movers.iter().all(|&m| {
            let d = dest(m).unwrap();
            let beats_rivals = movers
                .iter()
                .all(|&o| o == m || dest(o) != Some(d) || attack(o, None) < attack(m, None));
            let wins = beats_rivals
                && match units[d] {
                    None => true,
                    Some(occ) if Some(occ) == units[m] => dest(d).is_some_and(|e| e != m) && succ(d),
                    Some(occ) => match dest(d) {
                        None => attack(m, Some(occ)) > hold(d),
                        Some(e) if e == m => attack(m, Some(occ)) > attack(d, units[m]),
                        Some(_) => succ(d) || attack(m, Some(occ)) > 1,
                    },
                };
            wins == succ(m)
        });
        if consistent {
            let count = mask.count_ones() as usize;
            if best.as_ref().is_none_or(|(c, _)| count > *c) {
                best = Some((count, movers.iter().map(|&m| succ(m)).collect()));
            }
        }
    }
    let (_, succ) = best.expect("some assignment is consistent");
    let mut out = units.to_vec();
    for (i, &m) in movers.iter().enumerate() {
        if succ[i] {
            out[m] = None;
        }
    }
    for (i, &m) in movers.iter().enumerate() {
        if succ[i] {
            out[dest(m).unwrap()] = units[m];
        }
    }
    out
}


fn parse_order(map: &MapGraph, s: &str) -> OrderKind {
    let id = |x: &str| map.node_id(x.trim()).unwrap();
    match s {
        "H" => OrderKind::Hold,
        _ if s.starts_with('-') => OrderKind::Move(id(&s[1..])),
        _ => match s[1..].split_once('-') {
            Some((a, b)) => OrderKind::SupportMove(id(a), id(b)),
            None => OrderKind::SupportHold(id(&s[1..])),
        },
    }
}

pub type Setup = Vec<(&'static str, u8, &'static str)>;
pub type Occupancy = Vec<(&'static str, u8)>;

/// `(name, (node, owner, order) triples, occupied nodes afterwards)` on arena16.
pub fn rule_cases() -> Vec<(&'static str, Setup, Occupancy)> {
    vec![
        ("move into empty", vec![("b2", 0, "-b3")], vec![("b3", 0)]),
        (
            "supported attack dislodges",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "H")],
            vec![("a2", 0), ("b3", 0)],
        ),
        (
            "equal moves bounce",
            vec![("b2", 0, "-b3"), ("c4", 1, "-b3")],
            vec![("b2", 0), ("c4", 1)],
        ),
        (
            "support cut by third unit",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "H"), ("a1", 1, "-a2")],
            vec![("a1", 1), ("a2", 0), ("b2", 0), ("b3", 1)],
        ),
        (
            "unsupported attack on holder fails",
            vec![("b2", 0, "-b3"), ("b3", 1, "H")],
            vec![("b2", 0), ("b3", 1)],
        ),
        (
            "two against two fails",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "H"), ("a4", 1, "Sb3")],
            vec![("a2", 0), ("a4", 1), ("b2", 0), ("b3", 1)],
        ),
        (
            "three against two dislodges",
            vec![
                ("b2", 0, "-b3"),
                ("a2", 0, "Sb2-b3"),
                ("c2", 0, "Sb2-b3"),
                ("b3", 1, "H"),
                ("a4", 1, "Sb3"),
            ],
            vec![("a2", 0), ("a4", 1), ("b3", 0), ("c2", 0)],
        ),
        (
            "head to head equal bounces",
            vec![("b2", 0, "-b3"), ("b3", 1, "-b2")],
            vec![("b2", 0), ("b3", 1)],
        ),
        (
            "head to head stronger wins",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "-b2")],
            vec![("a2", 0), ("b3", 0)],
        ),
        (
            "own units cannot swap",
            vec![("b2", 0, "-b3"), ("b3", 0, "-b2")],
            vec![("b2", 0), ("b3", 0)],
        ),
        (
            "three unit ring rotates",
            vec![("b2", 0, "-b3"), ("b3", 1, "-c3"), ("c3", 0, "-b2")],
            vec![("b2", 0), ("b3", 0), ("c3", 1)],
        ),
        (
            "ring broken by intruder",
            vec![("b2", 0, "-b3"), ("b3", 1, "-c3"), ("c3", 0, "-b2"), ("a4", 1, "-b3")],
            vec![("a4", 1), ("b2", 0), ("b3", 1), ("c3", 0)],
        ),
        (
            "no move into own holder",
            vec![("b2", 0, "-b3"), ("b3", 0, "H")],
            vec![("b2", 0), ("b3", 0)],
        ),
        (
            "support cannot dislodge own unit",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 0, "H")],
            vec![("a2", 0), ("b2", 0), ("b3", 0)],
        ),
        (
            "follow vacating unit",
            vec![("b2", 0, "-b3"), ("b3", 1, "-b4")],
            vec![("b3", 0), ("b4", 1)],
        ),
        (
            "blocked chain stays",
            vec![("b2", 0, "-b3"), ("b3", 1, "-b4"), ("b4", 0, "H")],
            vec![("b2", 0), ("b3", 1), ("b4", 0)],
        ),
        (
            "supported attack dislodges failed mover",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "-b4"), ("b4", 0, "H")],
            vec![("a2", 0), ("b3", 0), ("b4", 0)],
        ),
        (
            "attack from target does not cut",
            vec![("b2", 0, "-b3"), ("a3", 0, "Sb2-b3"), ("b3", 1, "-a3")],
            vec![("a3", 0), ("b3", 0)],
        ),
        (
            "supported hold bounces supported attack",
            vec![("b2", 0, "-b3"), ("c2", 0, "Sb2-b3"), ("b3", 1, "H"), ("b4", 1, "Sb3")],
            vec![("b2", 0), ("b3", 1), ("b4", 1), ("c2", 0)],
        ),
        (
            "cut hold support",
            vec![
                ("b2", 0, "-b3"),
                ("c2", 0, "Sb2-b3"),
                ("b3", 1, "H"),
                ("b4", 1, "Sb3"),
                ("c4", 0, "-b4"),
            ],
            vec![("b3", 0), ("b4", 1), ("c2", 0), ("c4", 0)],
        ),
        (
            "hold support on a mover is void",
            vec![("b3", 1, "-c3"), ("b4", 1, "Sb3"), ("b2", 0, "-c3")],
            vec![("b2", 0), ("b3", 1), ("b4", 1)],
        ),
        (
            "mismatched move support is void",
            vec![("b2", 0, "-c3"), ("a2", 0, "Sb2-b3"), ("b3", 1, "H"), ("c4", 1, "-c3")],
            vec![("a2", 0), ("b2", 0), ("b3", 1), ("c4", 1)],
        ),
        (
            "own attack does not cut support",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("a1", 0, "-a2"), ("b3", 1, "H")],
            vec![("a1", 0), ("a2", 0), ("b3", 0)],
        ),
        (
            "strongest of three contenders wins",
            vec![("b2", 0, "-b3"), ("a2", 0, "Sb2-b3"), ("c4", 1, "-b3"), ("a4", 1, "-b3")],
            vec![("a2", 0), ("a4", 1), ("b3", 0), ("c4", 1)],
        ),
        (
            "bounced unit dislodged at home",
            vec![
                ("b2", 0, "-b3"),
                ("b4", 1, "-b3"),
                ("c1", 1, "-b2"),
                ("c2", 1, "Sc1-b2"),
            ],
            vec![("b2", 1), ("b4", 1), ("c2", 1)],
        ),
    ]
}

fn occupied(map: &MapGraph, units: &[Option<u8>]) -> Vec<(String, u8)> {
    units
        .iter()
        .enumerate()
        .filter_map(|(i, u)| u.map(|p| (map.nodes[i].clone(), p)))
        .collect()
}

/// Runs one case; `Err` describes how the engine, the oracle or the
/// expectation disagree.
pub fn check_case(setup: &[(&str, u8, &str)], expected: &[(&str, u8)]) -> Result<(), String> {
    let map = MapGraph::arena16();
    let mut units = vec![None; map.num_nodes()];
    let mut orders = vec![None; map.num_nodes()];
    for &(node, owner, order) in setup {
        let x = map.node_id(node).unwrap() as usize;
        units[x] = Some(owner);
        orders[x] = Some(parse_order(&map, order));
    }
    for &(node, owner, _) in setup {
        let x = map.node_id(node).unwrap();
        let kind = orders[x as usize].unwrap();
        if !is_valid_order(&map, &units, x, owner, kind) {
            return Err(format!("invalid order {node} {kind:?}"));
        }
    }
    let engine = adjudicate(&map, &units, &orders).units;
    let reference = oracle(&units, &orders);
    if engine != reference {
        return Err(format!("oracle {:?} engine {:?}", occupied(&map, &reference), occupied(&map, &engine)));
    }
    let mut want: Vec<(String, u8)> = expected.iter().map(|(n, p)| (n.to_string(), *p)).collect();
    want.sort_by_key(|(n, _)| map.node_id(n).unwrap());
    let got = occupied(&map, &engine);
    if got != want {
        return Err(format!("expected {want:?} got {got:?}"));
    }
    Ok(())
}

pub fn random_state(map: &MapGraph, players: u8, count: usize, rng: &mut ChaCha8Rng) -> Vec<Option<u8>> {
    let mut units = vec![None; map.num_nodes()];
    let mut placed = 0;
    while placed < count {
        let x = rng.random_range(0..map.num_nodes());
        if units[x].is_none() {
            units[x] = Some(rng.random_range(0..players));
            placed += 1;
        }
    }
    units
}

/// Random valid orders, biased toward supports that match an actual move.
pub fn coordinated_orders(map: &MapGraph, units: &[Option<u8>], rng: &mut ChaCha8Rng) -> Vec<Option<OrderKind>> {
    let mut orders: Vec<Option<OrderKind>> = (0..units.len())
        .map(|x| {
            units[x].map(|p| {
                let all = valid_orders(map, units, x as u8, p);
                all[rng.random_range(0..all.len())]
            })
        })
        .collect();
    for x in 0..units.len() {
        let Some(p) = units[x] else { continue };
        let matching: Vec<OrderKind> = valid_orders(map, units, x as u8, p)
            .into_iter()
            .filter(|k| match *k {
                OrderKind::SupportMove(s, d) => orders[s as usize] == Some(OrderKind::Move(d)),
                _ => false,
            })
            .collect();
        if !matching.is_empty() && rng.random_bool(0.5) {
            orders[x] = Some(matching[rng.random_range(0..matching.len())]);
        }
    }
    orders
}

/// Every placement of up to three units (any owners among `players`) and
/// every combination of their valid orders. Returns states checked and the
/// first disagreement with the oracle.
pub fn exhaustive_small(map: &MapGraph, players: u8) -> (usize, Option<String>) {
    let n = map.num_nodes();
    let mut checked = 0;
    let mut placements: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        placements.push(vec![a]);
        for b in a + 1..n {
            placements.push(vec![a, b]);
            for c in b + 1..n {
                placements.push(vec![a, b, c]);
            }
        }
    }
    for nodes in placements {
        let k = nodes.len() as u32;
        for owners in 0..(players as usize).pow(k) {
            let mut units = vec![None; n];
            let mut code = owners;
            for &x in &nodes {
                units[x] = Some((code % players as usize) as u8);
                code /= players as usize;
            }
            let choices: Vec<Vec<OrderKind>> =
                nodes.iter().map(|&x| valid_orders(map, &units, x as u8, units[x].unwrap())).collect();
            let mut idx = vec![0usize; nodes.len()];
            loop {
                let mut orders = vec![None; n];
                for (i, &x) in nodes.iter().enumerate() {
                    orders[x] = Some(choices[i][idx[i]]);
                }
                checked += 1;
                let engine = adjudicate(map, &units, &orders).units;
                if engine != oracle(&units, &orders) {
                    return (checked, Some(format!("units {units:?} orders {orders:?}")));
                }
                let mut i = 0;
                while i < idx.len() {
                    idx[i] += 1;
                    if idx[i] < choices[i].len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == idx.len() {
                    break;
                }
            }
        }
    }
    (checked, None)
}
