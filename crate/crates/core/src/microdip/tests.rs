use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::stogame::{Game, ReachableGraph};

fn random_state(map: &MapGraph, players: u8, count: usize, rng: &mut ChaCha8Rng) -> Vec<Option<u8>> {
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

fn random_orders(map: &MapGraph, units: &[Option<u8>], rng: &mut ChaCha8Rng) -> Vec<Option<OrderKind>> {
    use rand::seq::IndexedRandom;
    (0..units.len())
        .map(|x| {
            units[x].map(|p| *valid_orders(map, units, x as u8, p).choose(rng).unwrap())
        })
        .collect()
}

/// Random orders biased toward supports that match an actual move.
fn coordinated_orders(map: &MapGraph, units: &[Option<u8>], rng: &mut ChaCha8Rng) -> Vec<Option<OrderKind>> {
    let mut orders = random_orders(map, units, rng);
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn relabeling_players_commutes(seed in any::<u64>(), count in 1usize..=6) {
        let map = MapGraph::arena16();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = random_state(&map, 2, count, &mut rng);
        let orders = coordinated_orders(&map, &units, &mut rng);
        let swap = |u: &[Option<u8>]| u.iter().map(|x| x.map(|p| 1 - p)).collect::<Vec<_>>();
        let a = adjudicate(&map, &units, &orders).units;
        let b = adjudicate(&map, &swap(&units), &orders).units;
        prop_assert_eq!(swap(&a), b);
    }

    #[test]
    fn grid_reflection_commutes(seed in any::<u64>(), count in 1usize..=6) {
        let map = MapGraph::arena16();
        let mirror = |x: u8| (x / 4) * 4 + (3 - x % 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = random_state(&map, 2, count, &mut rng);
        let orders = coordinated_orders(&map, &units, &mut rng);
        let mut m_units = vec![None; 16];
        let mut m_orders = vec![None; 16];
        for x in 0..16u8 {
            m_units[mirror(x) as usize] = units[x as usize];
            m_orders[mirror(x) as usize] = orders[x as usize].map(|k| match k {
                OrderKind::Hold => OrderKind::Hold,
                OrderKind::Move(d) => OrderKind::Move(mirror(d)),
                OrderKind::SupportHold(t) => OrderKind::SupportHold(mirror(t)),
                OrderKind::SupportMove(s, d) => OrderKind::SupportMove(mirror(s), mirror(d)),
            });
        }
        let a = adjudicate(&map, &units, &orders).units;
        let b = adjudicate(&map, &m_units, &m_orders).units;
        for x in 0..16u8 {
            prop_assert_eq!(a[x as usize], b[mirror(x) as usize]);
        }
    }

    #[test]
    fn unmatched_support_is_a_no_op(seed in any::<u64>(), count in 2usize..=6) {
        let map = MapGraph::arena16();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = random_state(&map, 2, count, &mut rng);
        let orders = coordinated_orders(&map, &units, &mut rng);
        let base = adjudicate(&map, &units, &orders).units;
        for x in 0..16 {
            let unmatched = match orders[x] {
                Some(OrderKind::SupportMove(s, d)) => orders[s as usize] != Some(OrderKind::Move(d)),
                Some(OrderKind::SupportHold(t)) => matches!(orders[t as usize], Some(OrderKind::Move(_))),
                _ => false,
            };
            if unmatched {
                let mut o = orders.clone();
                o[x] = Some(OrderKind::Hold);
                prop_assert_eq!(&adjudicate(&map, &units, &o).units, &base);
            }
        }
    }

    #[test]
    fn sos_sums_to_one(counts in proptest::collection::vec(0usize..6, 1..5), threshold in 1usize..8) {
        let s: f64 = sos_score(&counts, threshold).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn one_unit_per_node_and_conservation() {
    let map = MapGraph::arena16();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let count = rng.random_range(1..=10);
        let units = random_state(&map, 2, count, &mut rng);
        let orders = coordinated_orders(&map, &units, &mut rng);
        let res = adjudicate(&map, &units, &orders);
        // the unit vector holds at most one owner per node by construction;
        // count conservation rules out two units landing on one node
        let before = units.iter().flatten().count();
        let after = res.units.iter().flatten().count();
        assert_eq!(after, before - res.dislodged.len());
        for &d in &res.dislodged {
            assert!(units[d as usize].is_some());
        }
    }
}

#[test]
fn sos_examples() {
    assert_eq!(sos_score(&[4, 0], 4), vec![1.0, 0.0]);
    assert_eq!(sos_score(&[2, 2], 3), vec![0.5, 0.5]);
    let s = sos_score(&[4, 2], 5);
    assert!((s[0] - 0.8).abs() < 1e-12 && (s[1] - 0.2).abs() < 1e-12);
    assert_eq!(sos_score(&[0, 0, 0], 2), vec![1.0 / 3.0; 3]);
}

#[test]
fn enumeration_counts() {
    let game = MicroDip::arena16(4);
    let map = &game.map;
    // lone unit in a corner: hold + 3 moves
    let s = game.state_with(&[(0, 0)], vec![None; 6], 0).unwrap();
    assert_eq!(game.action_count(&s, 0).unwrap(), 4);
    assert_eq!(game.legal_actions(&s, 0).unwrap().len(), 4);
    // two units in opposite corners with 4 options each
    let s = game.state_with(&[(0, 0), (15, 0)], vec![None; 6], 0).unwrap();
    assert_eq!(game.action_count(&s, 0).unwrap(), 16);
    let all = game.legal_actions(&s, 0).unwrap();
    assert_eq!(all.len(), 16);
    assert!(all.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(game.enumerate_actions(&s, 0, 5).unwrap(), all[..5].to_vec());
    assert_eq!(game.enumerate_actions(&s, 0, 5).unwrap(), game.enumerate_actions(&s, 0, 5).unwrap());
    // a player without units has one empty action
    assert_eq!(game.legal_actions(&s, 1).unwrap(), vec![PlayerAction::default()]);

    let start = game.initial_state();
    for p in 0..2 {
        let n = game.action_count(&start, p).unwrap();
        assert!(n >= 1000, "arena16 opening has {n} actions");
        // product rule against a brute-force per-unit order scan
        let mut product = 1u128;
        for loc in start.unit_locations(p as u8) {
            let brute = (0..16u8)
                .flat_map(|a| [OrderKind::Move(a), OrderKind::SupportHold(a)])
                .chain((0..16u8).flat_map(|a| (0..16u8).map(move |b| OrderKind::SupportMove(a, b))))
                .filter(|&k| is_valid_order(map, &start.units, loc, p as u8, k))
                .count()
                + 1;
            product *= brute as u128;
        }
        assert_eq!(n, product);
    }
}

#[test]
fn transitions_and_rewards() {
    let game = MicroDip::duel9(6);
    let s0 = game.initial_state();
    assert_eq!(s0.sc_counts(2), vec![1, 1]);
    let holds: Vec<PlayerAction> = (0..2).map(|p| game.legal_actions(&s0, p).unwrap()[0].clone()).collect();
    let (s1, r) = game.transition(&s0, &holds).unwrap();
    assert_eq!(r, vec![0.0, 0.0]);
    assert_eq!(s1.units, s0.units);
    assert_eq!(s1.turn, 1);

    // orders for the other player's units
    let mut bad = holds.clone();
    bad[0] = holds[1].clone();
    match game.transition(&s0, &bad) {
        Err(Error::IllegalAction { player, .. }) => assert_eq!(player, 0),
        other => panic!("expected illegal action, got {other:?}"),
    }

    // capture the center on the second turn and win with two of three centers
    let mv = |from: u8, to: u8| {
        let mut v = vec![
            Order { unit: from, kind: OrderKind::Move(to) },
            Order { unit: 2, kind: OrderKind::Hold },
        ];
        v.sort();
        PlayerAction(v)
    };
    let (s1, _) = game.transition(&s0, &[mv(0, 3), holds[1].clone()]).unwrap();
    assert_eq!(s1.sc_counts(2), vec![1, 1]);
    let (s2, r) = game.transition(&s1, &[mv(3, 4), holds[1].clone()]).unwrap();
    assert!(s2.terminal);
    assert_eq!(r, vec![1.0, 0.0]);
    assert!(matches!(game.transition(&s2, &holds), Err(Error::TerminalState)));

    let bytes = game.encode_state(&s2);
    assert_eq!(game.decode_state(&bytes).unwrap(), s2);
    let a = mv(0, 3);
    assert_eq!(game.decode_action(&game.encode_action(&a)).unwrap(), a);
}

#[test]
fn turn_cap_scores_sos() {
    let game = MicroDip::duel9(1);
    let s0 = game.initial_state();
    let holds: Vec<PlayerAction> = (0..2).map(|p| game.legal_actions(&s0, p).unwrap()[0].clone()).collect();
    let (s1, r) = game.transition(&s0, &holds).unwrap();
    assert!(s1.terminal);
    assert_eq!(r, vec![0.5, 0.5]);
}

#[test]
fn duel9_reachable_states_within_cap() {
    let game = MicroDip::duel9(6);
    let graph = ReachableGraph::build(&game, 10_000, 4096).unwrap();
    assert!(graph.len() <= 10_000, "{} states", graph.len());
}

#[test]
fn local_modification_stays_local() {
    let game = MicroDip::arena16(4);
    let s = game.initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let base = game.sample_action(&s, 0, &mut rng).unwrap();
        let loc = rng.random_range(0..16);
        let m = game.modify_near(&s, 0, &base, loc, &mut rng).unwrap();
        game.validate_action(&s, 0, &m).unwrap();
        for (a, b) in base.0.iter().zip(&m.0) {
            if a != b {
                assert!(game.map.adjacent(a.unit, loc as u8));
            }
        }
    }
}

#[test]
fn presets_and_json_maps() {
    for name in PRESETS {
        standard_map(name).unwrap().validate().unwrap();
    }
    assert!(matches!(standard_map("nope"), Err(Error::Unknown { .. })));
    let doc = serde_json::json!({
        "nodes": ["x", "y", "z"],
        "edges": [["x", "y"], ["y", "z"]],
        "scs": ["x", "z"],
        "homes": [["x"], ["z"]],
        "units": [["x", 0], ["z", 1]]
    });
    let map = MapGraph::from_json(&doc).unwrap();
    assert_eq!(map.neighbors(1), &[0, 2]);
    let disconnected = serde_json::json!({
        "nodes": ["x", "y"], "edges": [], "scs": ["x"], "homes": [["x"]], "units": []
    });
    assert!(matches!(MapGraph::from_json(&disconnected), Err(Error::InvalidMap(_))));
}

#[test]
fn renders_board() {
    let game = MicroDip::duel9(6);
    let s = game.initial_state();
    let text = render_text(&game.map, &s);
    assert!(text.contains("a1 P0"));
    let dot = render_dot(&game.map, &s);
    assert!(dot.starts_with("graph") && dot.contains("n0 -- n1"));
    let tri = MicroDip::tri12(4);
    assert!(render_text(&tri.map, &tri.initial_state()).contains("i0"));
}
