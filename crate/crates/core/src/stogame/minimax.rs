use std::collections::HashMap;

use super::graph::ReachableGraph;
use super::Game;
use crate::error::{Error, Result};
use crate::matrix::{exact_ne_2p0s, MixedStrategy, RestrictedStageGame};

/// Exact stage strategies over a state's full legal action lists.
#[derive(Clone, Debug)]
pub struct StagePolicy<A> {
    pub actions: Vec<Vec<A>>,
    pub strategies: Vec<MixedStrategy<f64>>,
}

/// Minimax continuation values and stage policies of every reachable state.
pub struct MinimaxSolution<G: Game> {
    pub graph: ReachableGraph<G>,
    /// Per-state continuation value (zero at terminal states).
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<Option<StagePolicy<G::Action>>>,
}

impl<G: Game> MinimaxSolution<G> {
    pub fn value(&self, state: &G::State) -> Option<&[f64]> {
        self.graph.index.get(state).map(|&i| self.values[i].as_slice())
    }

    pub fn policy(&self, state: &G::State) -> Option<&StagePolicy<G::Action>> {
        self.graph
            .index
            .get(state)
            .and_then(|&i| self.policies[i].as_ref())
    }

    pub fn root_value(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn to_map(&self) -> HashMap<G::State, Vec<f64>> {
        self.graph
            .states
            .iter()
            .cloned()
            .zip(self.values.iter().cloned())
            .collect()
    }
}

/// Stage payoff `r(s') + γ V(s')` for every joint action at `id`.
pub(crate) fn stage_from_graph<G: Game>(
    graph: &ReachableGraph<G>,
    id: usize,
    values: &[Vec<f64>],
    discount: f64,
) -> Result<RestrictedStageGame<f64>> {
    let node = graph.nodes[id].as_ref().ok_or(Error::TerminalState)?;
    let counts = node.counts();
    let mut k = 0usize;
    RestrictedStageGame::from_fn(counts, |_| {
        let s = node.successors[k];
        k += 1;
        Ok(graph.rewards[s]
            .iter()
            .zip(&values[s])
            .map(|(r, v)| r + discount * v)
            .collect())
    })
}

/// Exact minimax values by backward induction over turn count, solving each
/// stage game with the exact two-player oracle.
pub fn backward_induction_minimax<G: Game>(
    game: &G,
    state_cap: usize,
    joint_cap: u128,
) -> Result<MinimaxSolution<G>> {
    if game.num_players() != 2 {
        return Err(Error::NotZeroSum(format!(
            "backward induction needs 2 players, got {}",
            game.num_players()
        )));
    }
    let graph = ReachableGraph::build(game, state_cap, joint_cap)?;
    let n = graph.len();
    let mut values = vec![vec![0.0; 2]; n];
    let mut policies: Vec<Option<StagePolicy<G::Action>>> = (0..n).map(|_| None).collect();
    for id in graph.reverse_turn_order(game) {
        let Some(node) = graph.nodes[id].as_ref() else {
            continue;
        };
        let stage = stage_from_graph(&graph, id, &values, game.discount())?;
        let eq = exact_ne_2p0s(&stage)?;
        values[id] = eq.values;
        policies[id] = Some(StagePolicy {
            actions: node.actions.clone(),
            strategies: eq.strategies,
        });
    }
    Ok(MinimaxSolution {
        graph,
        values,
        policies,
    })
}
