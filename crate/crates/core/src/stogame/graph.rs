use std::collections::{HashMap, VecDeque};

use super::Game;
use crate::error::{Error, Result};
use crate::matrix::advance;

pub const DEFAULT_STATE_CAP: usize = 10_000;
/// Joint actions per state accepted by exhaustive solvers (64 x 64).
pub const DEFAULT_JOINT_CAP: u128 = 4096;

/// Every legal action per player at one state, and the successor index of
/// each joint action (row-major, last player fastest).
#[derive(Clone, Debug)]
pub struct JointSuccessors<A> {
    pub actions: Vec<Vec<A>>,
    pub successors: Vec<usize>,
}

impl<A> JointSuccessors<A> {
    pub fn counts(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }
}

/// The full reachable state graph of a small game.
pub struct ReachableGraph<G: Game> {
    pub states: Vec<G::State>,
    pub index: HashMap<G::State, usize>,
    /// `None` for terminal states.
    pub nodes: Vec<Option<JointSuccessors<G::Action>>>,
    /// Reward received on entering each state.
    pub rewards: Vec<Vec<f64>>,
}

impl<G: Game> ReachableGraph<G> {
    /// Breadth-first enumeration from the initial state.
    pub fn build(game: &G, state_cap: usize, joint_cap: u128) -> Result<Self> {
        let root = game.initial_state();
        let mut graph = Self {
            states: vec![root.clone()],
            index: HashMap::from([(root.clone(), 0)]),
            nodes: Vec::new(),
            rewards: vec![vec![0.0; game.num_players()]],
        };
        let mut queue = VecDeque::from([0usize]);
        let mut nodes: Vec<Option<JointSuccessors<G::Action>>> = vec![None];
        while let Some(id) = queue.pop_front() {
            let state = graph.states[id].clone();
            if game.is_terminal(&state) {
                continue;
            }
            let mut actions = Vec::with_capacity(game.num_players());
            let mut joint_total: u128 = 1;
            for p in 0..game.num_players() {
                let count = game.action_count(&state, p)?;
                joint_total = joint_total.saturating_mul(count);
                if joint_total > joint_cap {
                    return Err(Error::OracleSizeExceeded {
                        what: "joint actions per state",
                        size: joint_total,
                        cap: joint_cap,
                    });
                }
                actions.push(game.legal_actions(&state, p)?);
            }
            let counts: Vec<usize> = actions.iter().map(Vec::len).collect();
            let mut pos = vec![0usize; counts.len()];
            let mut successors = Vec::with_capacity(joint_total as usize);
            for _ in 0..joint_total {
                let joint: Vec<G::Action> =
                    pos.iter().enumerate().map(|(p, &a)| actions[p][a].clone()).collect();
                let next = game.next_state(&state, &joint)?;
                let nid = match graph.index.get(&next) {
                    Some(&n) => n,
                    None => {
                        if graph.states.len() >= state_cap {
                            return Err(Error::OracleSizeExceeded {
                                what: "reachable states",
                                size: graph.states.len() as u128 + 1,
                                cap: state_cap as u128,
                            });
                        }
                        let n = graph.states.len();
                        graph.rewards.push(game.reward(&next));
                        graph.index.insert(next.clone(), n);
                        graph.states.push(next);
                        nodes.push(None);
                        queue.push_back(n);
                        n
                    }
                };
                successors.push(nid);
                advance(&mut pos, &counts);
            }
            nodes[id] = Some(JointSuccessors { actions, successors });
        }
        graph.nodes = nodes;
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State indices ordered so every successor precedes its predecessors.
    pub fn reverse_turn_order(&self, game: &G) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(game.turn(&self.states[i])));
        order
    }

    pub fn decision_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_some())
    }
}
