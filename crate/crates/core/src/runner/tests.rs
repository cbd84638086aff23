use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use serde_json::json;

use super::train::Learner;
use super::*;
use crate::dnvi::{PolicyTarget, TrainTarget, ValueEntry, ValueTable};
use crate::error::Error;
use crate::microdip::MicroDip;
use crate::proposal::{ActionWeights, ProposalModel};
use crate::stogame::{Game, TabularGame};

fn small(game: &str, params: serde_json::Value) -> RunConfig {
    let mut cfg = RunConfig {
        game: game.into(),
        game_params: params,
        seed: 11,
        episodes: 12,
        pretrain_episodes: 3,
        num_samples: 20,
        num_candidates: 4,
        batch_size: 8,
        max_train_ratio: 2.0,
        publish_interval: 2,
        metrics_interval: 5,
        checkpoint_interval: 6,
        ..RunConfig::default()
    };
    cfg.solver.iterations = 64;
    cfg
}

fn duel9(turns: usize) -> MicroDip {
    match build_game("duel9", &json!({ "max_turns": turns })).unwrap() {
        GameInstance::MicroDip(g) => g,
        _ => unreachable!(),
    }
}

#[test]
fn config_defaults_and_validation() {
    let d = RunConfig::default();
    assert_eq!(d.buffer_capacity, 100_000);
    assert_eq!(d.batch_size, 256);
    assert_eq!(d.solver.iterations, 256);
    assert_eq!(d.num_candidates, 50);
    assert_eq!(d.num_samples, 250);
    d.validate().unwrap();
    let back = RunConfig::from_json(&d.to_json()).unwrap();
    assert_eq!(back, d);
    for bad in [
        json!({"workers": 0}),
        json!({"batch_size": 0}),
        json!({"max_train_ratio": 0.0}),
        json!({"alpha": 1.5}),
        json!({"explore": {"base": 2.0, "first_turns": []}}),
        json!({"per_unit_cap": 0}),
    ] {
        assert!(RunConfig::from_json(&bad.to_string()).is_err(), "{bad}");
    }
    assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    let partial = RunConfig::from_json(r#"{"game": "chain", "seed": 5}"#).unwrap();
    assert_eq!(partial.seed, 5);
    assert_eq!(partial.batch_size, 256);
}

#[test]
fn learning_rate_decays_to_floor() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.learning_rate(0), 1.0);
    assert!((cfg.learning_rate(4) - 0.5).abs() < 1e-12);
    assert_eq!(cfg.learning_rate(1_000_000), cfg.alpha);
}

#[test]
fn registry_builds_every_game() {
    for name in GAME_NAMES {
        let params = if name == "microdip" {
            json!({ "map": {
                "nodes": ["a", "b", "c"],
                "edges": [["a", "b"], ["b", "c"]],
                "scs": ["a", "c"],
                "homes": [["a"], ["c"]],
                "units": [["a", 0], ["c", 1]],
            }})
        } else {
            json!({})
        };
        let g = build_game(name, &params).unwrap_or_else(|e| panic!("{name}: {e}"));
        crate::with_game!(&g, g => assert!(g.num_players() >= 2));
    }
    assert!(matches!(build_game("go", &json!({})), Err(Error::Unknown { .. })));
    assert!(build_game("duel9", &json!({"max_turns": 0})).is_err());
    assert!(build_game("duel9", &json!({"horizon": 3})).is_err());
    assert!(build_game("random", &json!({"max_actions": 1})).is_err());
    assert!(build_game("duel9", &json!({"discount": 1.5})).is_err());
    let g = duel9(3);
    assert_eq!(g.max_turns(), 3);
    assert_eq!(g.name(), "duel9");
}

#[test]
fn buffer_evicts_oldest_first() {
    let mut b = ReplayBuffer::new(3);
    b.extend(0..5);
    assert_eq!(b.len(), 3);
    assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
    assert_eq!(b.pushed(), 5);
    assert_eq!(b.evicted(), 2);
    assert_eq!(b.pop(), Some(2));
    assert_eq!(b.pop(), Some(3));
    let mut rng = crate::rng::rng_from(0);
    let batch = b.sample_batch(10, &mut rng);
    assert!(batch.iter().all(|x| *x == 4));
    assert_eq!(b.sample_batch(4, &mut rng).len(), 4);
    let mut empty: ReplayBuffer<u8> = ReplayBuffer::new(1);
    assert!(empty.sample_batch(4, &mut rng).is_empty());
}

proptest! {
    #[test]
    fn buffer_holds_the_latest_items(cap in 1usize..20, n in 0usize..100) {
        let mut b = ReplayBuffer::new(cap);
        for i in 0..n {
            b.push(i);
            prop_assert!(b.len() <= cap);
        }
        let expect: Vec<usize> = (n.saturating_sub(cap)..n).collect();
        prop_assert_eq!(b.iter().copied().collect::<Vec<_>>(), expect);
        prop_assert_eq!(b.pushed() - b.evicted(), b.len() as u64);
    }
}

fn sample_checkpoint() -> (TabularGame, Checkpoint<TabularGame>) {
    let game = TabularGame::iterated_pennies(2);
    let mut values = ValueTable::for_game(&game);
    let s0 = game.initial_state();
    values.insert(
        s0,
        ValueEntry {
            values: vec![0.25, -0.25],
            visits: 7,
        },
    );
    values.insert(
        2,
        ValueEntry {
            values: vec![-0.5, 0.5],
            visits: 1,
        },
    );
    let mut proposal = ProposalModel::new(0.01);
    proposal
        .update_toward(&s0, 0, &[0usize, 1], &[0.75, 0.25], 1.0)
        .unwrap();
    proposal.update_toward(&s0, 1, &[1usize], &[1.0], 2.0).unwrap();
    let ckpt = Checkpoint {
        game: game.name().to_owned(),
        config: RunConfig {
            game: "pennies".into(),
            ..RunConfig::default()
        },
        version: 3,
        episodes: 40,
        values,
        proposal: proposal.clone(),
        frozen: Some(proposal),
    };
    (game, ckpt)
}

#[test]
fn checkpoint_round_trip() {
    let (game, ckpt) = sample_checkpoint();
    let bytes = ckpt.to_bytes(&game);
    let back = Checkpoint::from_bytes(&game, &bytes).unwrap();
    assert_eq!(back.values, ckpt.values);
    assert_eq!(back.proposal, ckpt.proposal);
    assert_eq!(back.frozen, ckpt.frozen);
    assert_eq!(back.config, ckpt.config);
    assert_eq!((back.version, back.episodes), (3, 40));
    assert_eq!(back.to_bytes(&game), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    ckpt.save(&game, &path).unwrap();
    assert_eq!(Checkpoint::load(&game, &path).unwrap().values, ckpt.values);
}

#[test]
fn checkpoint_rejects_damage() {
    let (game, ckpt) = sample_checkpoint();
    let bytes = ckpt.to_bytes(&game);
    for cut in [0, 5, 12, bytes.len() / 2, bytes.len() - 1] {
        assert!(Checkpoint::from_bytes(&game, &bytes[..cut]).is_err(), "cut at {cut}");
    }
    let mut flipped = bytes.clone();
    flipped[40] ^= 1;
    assert!(matches!(Checkpoint::from_bytes(&game, &flipped), Err(Error::Checkpoint(_))));
    let mut versioned = bytes.clone();
    versioned[8] = 99;
    match Checkpoint::from_bytes(&game, &versioned) {
        Err(Error::VersionMismatch { found: 99, expected }) => assert_eq!(expected, FORMAT_VERSION),
        other => panic!("{other:?}"),
    }
}

#[test]
fn checkpoint_for_other_game_names_both() {
    let (game, ckpt) = sample_checkpoint();
    let bytes = ckpt.to_bytes(&game);
    let other = TabularGame::iterated_pennies(3);
    let err = Checkpoint::from_bytes(&other, &bytes).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("pennies2") && msg.contains("pennies3"), "{msg}");
}

#[test]
fn metrics_header_is_stable() {
    assert_eq!(
        METRICS_HEADER,
        "interval,episodes,buffer_size,mean_episode_length,mean_root_value,do_actions_added_rate,exploitability,throttled"
    );
}

#[test]
fn training_writes_metrics_and_checkpoints() {
    let game = duel9(2);
    let cfg = small("duel9", json!({"max_turns": 2}));
    let dir = tempfile::tempdir().unwrap();
    let out = train(&game, &cfg, Some(dir.path())).unwrap();
    assert_eq!(out.stats.episodes, 12);
    assert_eq!(out.metrics.len(), 3);
    assert!(out.metrics.iter().all(|r| r.do_actions_added_rate == 0.0));
    assert!(out.metrics.iter().all(|r| (r.mean_episode_length - 2.0).abs() < 1e-12));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    assert_eq!(lines.count(), 3);
    let jsonl = std::fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
    for line in jsonl.lines() {
        let row: MetricsRow = serde_json::from_str(line).unwrap();
        assert!(row.episodes <= 12);
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["episodes"], 12);
    assert!(dir.path().join("checkpoint_000006.bin").exists());
    let loaded = Checkpoint::load(&game, &dir.path().join("checkpoint.bin")).unwrap();
    assert_eq!(loaded.values, out.checkpoint.values);
    assert_eq!(loaded.episodes, 12);
    assert!(loaded.values.len() > 1);
}

#[test]
fn single_worker_runs_are_bit_identical() {
    let game = duel9(2);
    let cfg = small("duel9", json!({"max_turns": 2}));
    let a = train(&game, &cfg, None).unwrap().checkpoint.to_bytes(&game);
    let b = train(&game, &cfg, None).unwrap().checkpoint.to_bytes(&game);
    assert_eq!(a, b);
    let other = RunConfig { seed: 12, ..cfg };
    assert_ne!(train(&game, &other, None).unwrap().checkpoint.to_bytes(&game), a);
}

#[test]
fn trainer_respects_ratio() {
    let game = TabularGame::iterated_pennies(3);
    for workers in [1, 3] {
        let cfg = RunConfig {
            workers,
            episodes: 40,
            max_train_ratio: 6.0,
            batch_size: 4,
            ..small("pennies", json!({}))
        };
        let out = train(&game, &cfg, None).unwrap();
        let s = &out.stats;
        assert_eq!(s.episodes, 40);
        assert_eq!(s.produced, 40 * 3);
        assert!(s.consumed as f64 <= 6.0 * s.produced as f64, "{s:?}");
        assert!(s.consumed > 0 && s.throttle_events > 0, "{s:?}");
        assert_eq!(s.consumed, s.batches * 4);
        if workers == 1 {
            // greedy consumer: within one batch of the cap
            assert!(s.consumed + 4 > (6.0 * s.produced as f64) as u64, "{s:?}");
        }
    }
}

#[test]
fn small_buffer_evicts_during_training() {
    let game = TabularGame::iterated_pennies(3);
    let cfg = RunConfig {
        buffer_capacity: 5,
        ..small("pennies", json!({}))
    };
    let out = train(&game, &cfg, None).unwrap();
    assert_eq!(out.stats.buffer_len, 5);
    assert_eq!(out.stats.buffer_evicted, out.stats.produced - 5);
}

#[test]
fn npu_workers_keep_the_frozen_proposal() {
    let game = duel9(2);
    let cfg = RunConfig {
        proposal_mode: ProposalMode::Npu,
        ..small("duel9", json!({"max_turns": 2}))
    };
    let mut seen: Vec<Arc<ProposalModel<_, _>>> = Vec::new();
    let out = train_with_hook(&game, &cfg, None, &mut |s| seen.push(Arc::clone(&s.proposal))).unwrap();
    assert_eq!(seen.len() as u64, out.stats.snapshots);
    assert!(seen.len() > 2);
    let frozen = out.checkpoint.frozen.clone().unwrap();
    for p in &seen {
        assert!(Arc::ptr_eq(p, &seen[0]));
        assert!(**p == frozen);
    }
    assert!(out.checkpoint.proposal != frozen, "trainer proposal should keep learning");

    let normal = RunConfig {
        proposal_mode: ProposalMode::Normal,
        ..cfg
    };
    let mut versions = Vec::new();
    let out = train_with_hook(&game, &normal, None, &mut |s| versions.push((*s.proposal).clone())).unwrap();
    assert!(out.checkpoint.frozen.is_none());
    assert!(versions.first() != versions.last());
}

#[test]
fn multi_worker_training_completes() {
    let game = duel9(2);
    let cfg = RunConfig {
        workers: 3,
        ..small("duel9", json!({"max_turns": 2}))
    };
    let dir = tempfile::tempdir().unwrap();
    let out = train(&game, &cfg, Some(dir.path())).unwrap();
    assert_eq!(out.stats.episodes, 12);
    assert_eq!(out.metrics.last().unwrap().episodes, 12);
    assert!(out.stats.snapshots >= 7);
    assert!(dir.path().join("checkpoint.bin").exists());
}

#[test]
fn do_training_reports_added_actions() {
    let game = duel9(2);
    let mut do_cfg = crate::explore::DoConfig::training();
    do_cfg.pool_size = 50;
    do_cfg.iterations = 2;
    let cfg = RunConfig {
        double_oracle: Some(do_cfg),
        do_trace: true,
        episodes: 4,
        metrics_interval: 4,
        ..small("duel9", json!({"max_turns": 2}))
    };
    let dir = tempfile::tempdir().unwrap();
    let out = train(&game, &cfg, Some(dir.path())).unwrap();
    assert!(out.metrics[0].do_actions_added_rate > 0.0);
    let trace = std::fs::read_to_string(dir.path().join("do_trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert!(first.get("episode").is_some() && first.get("pool_size").is_some());
}

#[test]
fn exploitability_probe_fills_the_column() {
    let game = TabularGame::chain_conflict();
    let cfg = RunConfig {
        exploitability_probe: true,
        ..small("chain", json!({}))
    };
    let out = train(&game, &cfg, None).unwrap();
    for r in &out.metrics {
        let e = r.exploitability.unwrap();
        assert!(e >= -1e-9, "{e}");
    }
    assert!(out.metrics[0].csv_line().split(',').nth(6).unwrap().parse::<f64>().is_ok());
}

#[test]
#[cfg(debug_assertions)]
fn foreign_thread_writes_are_caught() {
    let game = TabularGame::iterated_pennies(1);
    let mut learner: Learner<TabularGame> = Learner {
        values: ValueTable::for_game(&game),
        proposal: ProposalModel::new(0.0),
        owner: std::thread::current().id(),
    };
    let cfg = RunConfig::default();
    let target = TrainTarget {
        state: game.initial_state(),
        values: vec![1.0, -1.0],
        policies: vec![
            PolicyTarget {
                actions: Vec::new(),
                probs: Vec::new(),
            };
            2
        ],
        generation: 0,
    };
    learner.apply(&cfg, &target).unwrap();
    let r = std::thread::scope(|s| s.spawn(|| learner.apply(&cfg, &target)).join());
    assert!(r.is_err());
}

#[test]
fn proposal_entries_survive_round_trip_with_many_actions() {
    let game = duel9(2);
    let s = game.initial_state();
    let mut rng = crate::rng::rng_from(3);
    let actions: Vec<_> = (0..6).map(|_| game.sample_action(&s, 1, &mut rng).unwrap()).collect();
    let mut weights = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        weights.insert(a.clone(), i as f64 + 0.5);
    }
    let mut proposal = ProposalModel::new(0.001);
    proposal.insert_entry(s.clone(), 1, ActionWeights { weights, total: 9.0 });
    let ckpt = Checkpoint::<MicroDip> {
        game: "duel9".into(),
        config: RunConfig::default(),
        version: 0,
        episodes: 0,
        values: ValueTable::for_game(&game),
        proposal,
        frozen: None,
    };
    let back = Checkpoint::from_bytes(&game, &ckpt.to_bytes(&game)).unwrap();
    assert_eq!(back.proposal, ckpt.proposal);
    assert!(back.frozen.is_none());
}
