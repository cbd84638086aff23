use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eqlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqlearn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = eqlearn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"))
}

const TINY: [&str; 12] = [
    "--episodes",
    "8",
    "--pretrain-episodes",
    "2",
    "--num-samples",
    "20",
    "--num-candidates",
    "4",
    "--rm-iters",
    "64",
    "--batch-size",
    "8",
];

fn train_into(dir: &Path, game: &[&str]) -> String {
    let mut args = vec!["train", "--out-dir", dir.to_str().unwrap(), "--seed", "3"];
    args.extend_from_slice(game);
    args.extend_from_slice(&TINY);
    let v = ok_json(&args);
    assert_eq!(v["episodes"], 8);
    v["checkpoint"].as_str().unwrap().to_owned()
}

#[test]
fn solve_matrix_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"players": 2, "payoffs": [[-1, 2], [1, -3]]}"#).unwrap();
    let v = ok_json(&["solve-matrix", path.to_str().unwrap(), "--iters", "50000", "--seed", "4"]);
    let value = v["values"][0].as_f64().unwrap();
    assert!((value + 1.0 / 7.0).abs() < 0.02, "{v}");
    let exact = v["exact"]["values"][0].as_f64().unwrap();
    assert!((exact + 1.0 / 7.0).abs() < 1e-9);
    let row = v["strategies"][0][0].as_f64().unwrap();
    assert!((row - 4.0 / 7.0).abs() < 0.02);

    let plain = ok_json(&[
        "solve-matrix",
        path.to_str().unwrap(),
        "--iters",
        "2000",
        "--optimism",
        "off",
        "--linear",
        "off",
    ]);
    assert_eq!(plain["iterations"], 2000);
}

#[test]
fn train_then_inspect_tabular_game() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train_into(dir.path(), &["--game", "pennies"]);
    for f in ["metrics.csv", "metrics.jsonl", "summary.json", "checkpoint.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let v = ok_json(&["dump-values", "--checkpoint", &ckpt, "--top", "3"]);
    let entries = v["entries"].as_array().unwrap();
    assert!(!entries.is_empty() && entries.len() <= 3);
    let visits: Vec<u64> = entries.iter().map(|e| e["visits"].as_u64().unwrap()).collect();
    assert!(visits.windows(2).all(|w| w[0] >= w[1]));

    let v = ok_json(&["inspect-proposal", "--checkpoint", &ckpt, "--player", "1", "--top", "2"]);
    let probs: f64 = v["actions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["probability"].as_f64().unwrap())
        .sum();
    assert!(probs <= 1.0 + 1e-9 && probs > 0.0);

    let eval_dir = dir.path().join("eval");
    let v = ok_json(&[
        "evaluate",
        "--checkpoint",
        &ckpt,
        "--games",
        "6",
        "--exact",
        "--out-dir",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(v["exploitability"]["nash_conv"].as_f64().unwrap() >= -1e-9);
    assert_eq!(v["games"], 6);
    let csv = std::fs::read_to_string(eval_dir.join("matches.csv")).unwrap();
    assert!(csv.starts_with("game,seed,seats,raw_0,raw_1,adjusted_0,adjusted_1"));
    assert_eq!(csv.lines().count(), 7);

    let v = ok_json(&[
        "exploit",
        "--checkpoint",
        &ckpt,
        "--train-episodes",
        "20",
        "--games",
        "4",
    ]);
    assert_eq!(v["exploiter_episodes"], 20);
}

#[test]
fn headtohead_between_baselines() {
    let v = ok_json(&[
        "headtohead",
        "--game",
        "chain",
        "--agent",
        "uniform",
        "--agent",
        "first",
        "--games",
        "10",
        "--threads",
        "2",
    ]);
    let agents = v["agents"].as_array().unwrap();
    assert_eq!(agents.len(), 2);
    assert_eq!(agents[1]["label"], "first-action");
}

#[test]
fn microdip_train_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train_into(
        dir.path(),
        &["--game", "duel9", "--game-params", r#"{"max_turns": 2}"#, "--do-gen", "local", "--do-pool", "30", "--do-trace"],
    );
    assert!(dir.path().join("do_trace.jsonl").exists());
    let v = ok_json(&["inspect-proposal", "--checkpoint", &ckpt]);
    assert!(v["known"].as_bool().unwrap());

    let dot = dir.path().join("s.dot");
    let out = eqlearn(&["render", "--game", "duel9", "--dot", dot.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(!out.stdout.is_empty());
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("graph"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"game": "chain", "episodes": 5, "pretrain_episodes": 1, "num_samples": 10, "num_candidates": 2, "batch_size": 4}"#).unwrap();
    let out_dir = dir.path().join("run");
    let v = ok_json(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--episodes",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(v["episodes"], 3);
    assert_eq!(v["game"], "chain");
}

#[test]
fn errors_are_json_on_stderr() {
    let out = eqlearn(&["train", "--game", "chess"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "unknown");
    assert!(err["message"].as_str().unwrap().contains("chess"));

    let out = eqlearn(&["train", "--batch-size", "0"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");

    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("x.bin");
    std::fs::write(&bogus, b"not a checkpoint").unwrap();
    let out = eqlearn(&["dump-values", "--checkpoint", bogus.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "checkpoint");

    let out = eqlearn(&["render", "--game", "pennies"]);
    assert!(!out.status.success());
}
