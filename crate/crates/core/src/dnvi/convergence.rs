use rand::Rng;

use super::values::{ValueEntry, ValueTable};
use crate::error::{Error, Result};
use crate::matrix::{solve_restricted, SolverConfig};
use crate::stogame::{stage_from_graph, Game, ReachableGraph, DEFAULT_JOINT_CAP, DEFAULT_STATE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceMode {
    /// Synchronous updates of every reachable state per iteration.
    Sweep,
    /// ε-exploring self-play episodes from the initial state.
    SelfPlay,
}

#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    /// Sweeps or episodes.
    pub iterations: usize,
    /// Learning rate α_t = c / (c + t), t counting prior updates of the state.
    pub alpha_c: f64,
    pub epsilon: f64,
    pub solver: SolverConfig,
    pub mode: ConvergenceMode,
    pub state_cap: usize,
    pub joint_cap: u128,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            iterations: 40,
            alpha_c: 4.0,
            epsilon: 0.2,
            solver: SolverConfig::with_iterations(1000),
            mode: ConvergenceMode::Sweep,
            state_cap: DEFAULT_STATE_CAP,
            joint_cap: DEFAULT_JOINT_CAP,
        }
    }
}

fn alpha(c: f64, t: u64) -> f64 {
    c / (c + t as f64)
}

/// Nash value iteration over all legal actions, each stage solved by regret
/// matching. Returns the learned continuation table.
pub fn tabular_convergence_run<G: Game, R: Rng + ?Sized>(
    game: &G,
    cfg: &ConvergenceConfig,
    rng: &mut R,
) -> Result<ValueTable<G::State>> {
    if !(cfg.alpha_c > 0.0) || !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0) {
        return Err(Error::Config("alpha_c must be positive and epsilon in (0, 1]".into()));
    }
    let graph = ReachableGraph::build(game, cfg.state_cap, cfg.joint_cap)?;
    let n = graph.len();
    let default = ValueTable::<G::State>::for_game(game).default_value().to_vec();
    let mut values: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if graph.nodes[i].is_some() {
                default.clone()
            } else {
                vec![0.0; game.num_players()]
            }
        })
        .collect();
    let mut visits = vec![0u64; n];
    let decision: Vec<usize> = graph.decision_states().collect();
    match cfg.mode {
        ConvergenceMode::Sweep => {
            for _ in 0..cfg.iterations {
                let mut targets = Vec::with_capacity(decision.len());
                for &id in &decision {
                    let stage = stage_from_graph(&graph, id, &values, game.discount())?;
                    targets.push(solve_restricted(&stage, &cfg.solver, rng)?.values);
                }
                for (&id, t) in decision.iter().zip(targets) {
                    let a = alpha(cfg.alpha_c, visits[id]);
                    for (v, x) in values[id].iter_mut().zip(t) {
                        *v = (1.0 - a) * *v + a * x;
                    }
                    visits[id] += 1;
                }
            }
        }
        ConvergenceMode::SelfPlay => {
            for _ in 0..cfg.iterations {
                let mut id = 0usize;
                while let Some(node) = graph.nodes[id].as_ref() {
                    let stage = stage_from_graph(&graph, id, &values, game.discount())?;
                    let eq = solve_restricted(&stage, &cfg.solver, rng)?;
                    let a = alpha(cfg.alpha_c, visits[id]);
                    for (v, x) in values[id].iter_mut().zip(&eq.values) {
                        *v = (1.0 - a) * *v + a * x;
                    }
                    visits[id] += 1;
                    let joint: Vec<usize> = eq
                        .strategies
                        .iter()
                        .map(|s| {
                            if rng.random_bool(cfg.epsilon) {
                                rng.random_range(0..s.len())
                            } else {
                                s.sample(rng)
                            }
                        })
                        .collect();
                    let counts = node.counts();
                    let flat = joint.iter().zip(&counts).fold(0usize, |acc, (j, c)| acc * c + j);
                    id = node.successors[flat];
                }
            }
        }
    }
    let mut table = ValueTable::new(default);
    for &id in &decision {
        if visits[id] > 0 {
            table.insert(
                graph.states[id].clone(),
                ValueEntry {
                    values: values[id].clone(),
                    visits: visits[id],
                },
            );
        }
    }
    Ok(table)
}
