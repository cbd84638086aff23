use std::sync::Arc;

use eqlearn::dnvi::StageSolver;
use eqlearn::eval::{exploitability, AgentHandle, ExactOptions, SearchParams};
use eqlearn::explore::{DoConfig, GeneratorKind};
use eqlearn::microdip::MicroDip;
use eqlearn::runner::{train_with_hook, RunConfig, Snapshot};
use serde_json::json;

fn nash_conv(game: &MicroDip, agent: &AgentHandle<MicroDip>) -> f64 {
    exploitability(game, agent, ExactOptions { seed: 7, ..Default::default() }).unwrap().nash_conv
}

/// Training with local double oracle beats the agent that only saw
/// pretraining, seed for seed.
#[test]
fn double_oracle_training_beats_pretraining() {
    let game = MicroDip::duel9(3);
    let mut better = 0;
    let mut rows = Vec::new();
    for seed in 0..4 {
        let mut cfg = RunConfig {
            game: "duel9".into(),
            game_params: json!({"max_turns": 3}),
            seed,
            episodes: 120,
            pretrain_episodes: 10,
            num_samples: 30,
            num_candidates: 6,
            batch_size: 16,
            publish_interval: 5,
            ..RunConfig::default()
        };
        cfg.solver.iterations = 200;
        cfg.double_oracle = Some(DoConfig {
            generator: GeneratorKind::Local,
            pool_size: 50,
            iterations: 4,
            ..DoConfig::training()
        });
        let search = SearchParams {
            num_samples: cfg.num_samples,
            num_candidates: cfg.num_candidates,
            solver: StageSolver::RegretMatching(cfg.solver.clone()),
            ..Default::default()
        };
        let mut first: Option<Snapshot<MicroDip>> = None;
        let out = train_with_hook(&game, &cfg, None, &mut |s| {
            if first.is_none() {
                first = Some(s.clone());
            }
        })
        .unwrap();
        let pre = first.expect("a snapshot after pretraining");
        assert_eq!(pre.version, 1);
        let pretrained = AgentHandle::new("pretrain", Arc::clone(&pre.proposal), Arc::clone(&pre.values), search.clone(), None)
            .unwrap();
        let before = nash_conv(&game, &pretrained);
        let after = nash_conv(&game, &out.agent("trained", search).unwrap());
        rows.push((before, after));
        better += (after < before - 1e-3) as usize;
    }
    println!("pretrain vs trained: {rows:?}");
    assert!(better >= 3, "{rows:?}");
}
