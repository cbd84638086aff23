use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::matrix::{exact_ne_2p0s, MixedStrategy, SolverConfig};
use crate::microdip::MicroDip;
use crate::proposal::{CandidateSet, ProposalModel};
use crate::stogame::{backward_induction_minimax, Game, TabularGame};

fn full_candidates<G: Game>(game: &G, state: &G::State) -> Vec<CandidateSet<G::Action>> {
    (0..game.num_players())
        .map(|p| CandidateSet::from_actions(game.legal_actions(state, p).unwrap()).unwrap())
        .collect()
}

#[test]
fn terminal_successors_pay_exact_rewards() {
    let game = TabularGame::matrix_game("m", &[vec![1.0, -2.0], vec![0.5, 3.0]]);
    let mut values = ValueTable::for_game(&game);
    // stored values of terminal states are never read
    for s in 0..game.states.len() {
        values.apply(&s, &[9.0, 9.0], 1.0).unwrap();
    }
    let s = game.initial_state();
    let stage = stage_game(&game, &s, &full_candidates(&game, &s), &values).unwrap();
    assert_eq!(stage.payoffs(&[0, 1]).unwrap(), vec![-2.0, 2.0]);
    assert_eq!(stage.payoffs(&[1, 1]).unwrap(), vec![3.0, -3.0]);
}

#[test]
fn zero_discount_keeps_only_rewards() {
    let mut game = TabularGame::random_zero_sum(3, 3, 3, 3, 0.9, true);
    game.discount = 0.0;
    let mut values = ValueTable::for_game(&game);
    for s in 0..game.states.len() {
        values.apply(&s, &[5.0, -5.0], 1.0).unwrap();
    }
    let s = game.initial_state();
    let stage = stage_game(&game, &s, &full_candidates(&game, &s), &values).unwrap();
    let acts: Vec<Vec<usize>> = (0..2).map(|p| game.legal_actions(&s, p).unwrap()).collect();
    for i in 0..acts[0].len() {
        for j in 0..acts[1].len() {
            let next = game.next_state(&s, &[acts[0][i], acts[1][j]]).unwrap();
            assert_eq!(stage.payoffs(&[i, j]).unwrap(), game.reward(&next));
        }
    }
}

#[test]
fn duel9_stage_matches_brute_force() {
    let game = MicroDip::duel9(6);
    let s = game.initial_state();
    let mut values = ValueTable::for_game(&game);
    let cands = full_candidates(&game, &s);
    // seed a few successor values so continuation matters
    for (k, a) in cands[0].actions.iter().enumerate().take(5) {
        let next = game.next_state(&s, &[a.clone(), cands[1].actions[0].clone()]).unwrap();
        values.apply(&next, &[0.1 * k as f64, 1.0 - 0.1 * k as f64], 1.0).unwrap();
    }
    let stage = stage_game(&game, &s, &cands, &values).unwrap();
    for (i, a) in cands[0].actions.iter().enumerate() {
        for (j, b) in cands[1].actions.iter().enumerate() {
            let (next, r) = game.transition(&s, &[a.clone(), b.clone()]).unwrap();
            let v = if game.is_terminal(&next) { vec![0.0, 0.0] } else { values.get(&next).to_vec() };
            let want: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r + v).collect();
            assert_eq!(stage.payoffs(&[i, j]).unwrap(), want);
        }
    }
}

#[test]
fn value_update_examples() {
    let game = TabularGame::matrix_game("pennies", &[vec![1.0, -1.0], vec![-1.0, 1.0]]);
    let s = game.initial_state();
    let cands = full_candidates(&game, &s);
    let stage = stage_game(&game, &s, &cands, &ValueTable::for_game(&game)).unwrap();
    let solver = StageSolver::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut values = ValueTable::for_game(&game);
    let uniform = vec![MixedStrategy::uniform(2), MixedStrategy::uniform(2)];
    let t = nash_value_update::<TabularGame, _>(&mut values, &s, &cands, &uniform, &stage, 1.0, &solver, &mut rng).unwrap();
    assert_eq!(t.values, vec![0.0, 0.0]);
    assert_eq!(values.get(&s), &[0.0, 0.0]);

    let pure = vec![MixedStrategy::pure(2, 0), MixedStrategy::pure(2, 1)];
    let t = nash_value_update::<TabularGame, _>(&mut values, &s, &cands, &pure, &stage, 1.0, &solver, &mut rng).unwrap();
    assert_eq!(t.values, vec![-1.0, 1.0]);
    assert_eq!(values.get(&s), &[-1.0, 1.0]);
    assert_eq!(t.policies[1].probs, vec![0.0, 1.0]);

    // fixed sigma and successors: the error halves each step at alpha 1/2
    let mut values = ValueTable::new(vec![1.0, -1.0]);
    let mut trace = Vec::new();
    for _ in 0..3 {
        nash_value_update::<TabularGame, _>(&mut values, &s, &cands, &pure, &stage, 0.5, &solver, &mut rng).unwrap();
        trace.push(values.get(&s)[0]);
    }
    assert_eq!(trace, vec![0.0, -0.5, -0.75]);
    assert!(values.apply(&s, &[f64::NAN, 0.0], 0.5).is_err());
    assert!(values.apply(&s, &[0.0, 0.0], 0.0).is_err());
}

#[test]
fn schedule_defaults() {
    let two = ExploreSchedule::for_players(2);
    assert_eq!((two.epsilon(0), two.epsilon(1), two.epsilon(2), two.epsilon(9)), (0.8, 0.5, 0.1, 0.1));
    let three = ExploreSchedule::for_players(3);
    assert_eq!((three.epsilon(0), three.epsilon(1), three.epsilon(2)), (0.3, 0.2, 0.1));
    assert!(ExploreSchedule::new(1.5, vec![]).is_err());
}

#[test]
fn full_exploration_plays_uniform_candidates() {
    let game = TabularGame::matrix_game("m", &vec![vec![5.0, 0.0, 0.0, 0.0]; 4]);
    let values = ValueTable::for_game(&game);
    let proposal = ProposalModel::new(0.0);
    let mut cfg = SelfPlayConfig::for_players(2);
    cfg.num_samples = 200;
    cfg.schedule = ExploreSchedule::constant(1.0).unwrap();
    cfg.solver = StageSolver::RegretMatching(SolverConfig::with_iterations(64));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0.0f64; 4];
    let n = 10_000;
    for _ in 0..n {
        let ep = selfplay_episode(&game, &values, &proposal, &cfg, 0, &mut rng).unwrap();
        counts[ep.trajectory.steps[0].1[1]] += 1.0;
    }
    let expected = n as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 3 degrees of freedom, p = 0.001
    assert!(chi2 < 16.27, "chi-square {chi2}");
}

#[test]
fn greedy_single_candidate_play_is_deterministic() {
    let game = TabularGame::chain_conflict();
    let values = ValueTable::for_game(&game);
    let mut proposal = ProposalModel::new(0.0);
    // pin one action per player at every state
    for s in 0..game.states.len() {
        if !game.is_terminal(&s) {
            for p in 0..2 {
                proposal.update_toward(&s, p, &[0], &[1.0], 1.0).unwrap();
            }
        }
    }
    let mut cfg = SelfPlayConfig::for_players(2);
    cfg.schedule = ExploreSchedule::constant(0.0).unwrap();
    let runs: Vec<_> = (0..3)
        .map(|seed| {
            let ep = selfplay_episode(&game, &values, &proposal, &cfg, 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for t in &ep.targets {
                assert!(ep.trajectory.steps.iter().any(|(s, _)| *s == t.state));
            }
            (ep.trajectory.steps, ep.trajectory.final_state)
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn pretrain_targets_are_realized_outcomes() {
    // every path pays (1, 0) at the end of two turns
    let mut game = TabularGame::iterated_pennies(2);
    for st in &mut game.states {
        if st.is_terminal() {
            st.reward = vec![1.0, 0.0];
        }
    }
    game.constant_sum = None;
    let values = ValueTable::for_game(&game);
    let solver = StageSolver::RegretMatching(SolverConfig::with_iterations(32));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (traj, targets) = pretrain_episode(&game, &values, 4, &solver, 0, &mut rng).unwrap();
    assert_eq!(traj.returns, vec![1.0, 0.0]);
    assert_eq!(targets.len(), 2);
    for t in &targets {
        assert_eq!(t.values, vec![1.0, 0.0]);
    }
    game.discount = 0.5;
    let (_, targets) = pretrain_episode(&game, &values, 4, &solver, 0, &mut rng).unwrap();
    assert_eq!(targets[0].values, vec![0.5, 0.0]);
    assert_eq!(targets[1].values, vec![1.0, 0.0]);
}

#[test]
fn one_sweep_solves_a_matrix_game() {
    let game = TabularGame::matrix_game("m", &[vec![3.0, -1.0], vec![-2.0, 1.0]]);
    let cfg = ConvergenceConfig {
        iterations: 1,
        alpha_c: 1.0,
        solver: SolverConfig::with_iterations(50_000),
        ..ConvergenceConfig::default()
    };
    let table = tabular_convergence_run(&game, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let s = game.initial_state();
    let exact = exact_ne_2p0s(&stage_game(&game, &s, &full_candidates(&game, &s), &ValueTable::for_game(&game)).unwrap()).unwrap();
    assert!((table.get(&s)[0] - exact.values[0]).abs() < 0.02);
}

#[test]
fn pennies_converge_to_zero_in_both_modes() {
    let game = TabularGame::iterated_pennies(2);
    for mode in [ConvergenceMode::Sweep, ConvergenceMode::SelfPlay] {
        let cfg = ConvergenceConfig {
            iterations: if mode == ConvergenceMode::Sweep { 30 } else { 3000 },
            mode,
            solver: SolverConfig::with_iterations(500),
            ..ConvergenceConfig::default()
        };
        let table = tabular_convergence_run(&game, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let v = table.get(&game.initial_state());
        assert!(v[0].abs() <= 0.05, "{mode:?}: {v:?}");
        // zero-sum estimates stay balanced
        for (_, e) in table.entries() {
            assert!((e.values[0] + e.values[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn sweep_matches_minimax_on_random_games() {
    for seed in 0..2 {
        let game = TabularGame::random_zero_sum(seed, 3, 2, 3, 1.0, true);
        let oracle = backward_induction_minimax(&game, 10_000, 4096).unwrap();
        let cfg = ConvergenceConfig {
            iterations: 30,
            solver: SolverConfig::with_iterations(2000),
            ..ConvergenceConfig::default()
        };
        let table = tabular_convergence_run(&game, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for id in oracle.graph.decision_states() {
            let s = &oracle.graph.states[id];
            let err = (table.get(s)[0] - oracle.values[id][0]).abs();
            assert!(err <= 0.05, "seed {seed} state {s}: {err}");
            // bounded by the terminal reward range
            assert!(table.get(s)[0].abs() <= 1.0 + 0.2 * 3.0);
        }
    }
}
