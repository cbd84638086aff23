//! Small explicit games with known minimax structure, for oracle tests.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Game;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularState {
    pub turn: usize,
    /// Reward received on entering this state.
    pub reward: Vec<f64>,
    /// Empty for terminal states.
    pub action_counts: Vec<usize>,
    /// Successor index per joint action, row-major.
    pub next: Vec<usize>,
}

impl TabularState {
    pub fn is_terminal(&self) -> bool {
        self.action_counts.is_empty()
    }
}

/// A deterministic game given by explicit tables. States are indices, actions
/// are per-player indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularGame {
    pub name: String,
    pub num_players: usize,
    pub discount: f64,
    pub states: Vec<TabularState>,
    #[serde(default)]
    pub constant_sum: Option<f64>,
}

struct Builder {
    players: usize,
    states: Vec<TabularState>,
}

impl Builder {
    fn new(players: usize) -> Self {
        Self { players, states: Vec::new() }
    }

    fn terminal(&mut self, turn: usize, reward: Vec<f64>) -> usize {
        self.states.push(TabularState {
            turn,
            reward,
            action_counts: Vec::new(),
            next: Vec::new(),
        });
        self.states.len() - 1
    }

    fn placeholder(&mut self, turn: usize) -> usize {
        let r = vec![0.0; self.players];
        self.terminal(turn, r)
    }

    fn set_decision(&mut self, id: usize, counts: Vec<usize>, next: Vec<usize>) {
        self.states[id].action_counts = counts;
        self.states[id].next = next;
    }
}

impl TabularGame {
    pub fn validate(&self) -> Result<()> {
        if self.num_players == 0 || self.states.is_empty() {
            return Err(Error::Config("tabular game needs players and states".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!("discount {} outside (0, 1]", self.discount)));
        }
        for (i, s) in self.states.iter().enumerate() {
            if s.reward.len() != self.num_players {
                return Err(Error::Config(format!("state {i} reward has wrong length")));
            }
            if !s.is_terminal() {
                let joint: usize = s.action_counts.iter().product();
                if s.action_counts.len() != self.num_players || joint != s.next.len() || joint == 0 {
                    return Err(Error::Config(format!("state {i} transition table malformed")));
                }
                for &n in &s.next {
                    if n >= self.states.len() || self.states[n].turn != s.turn + 1 {
                        return Err(Error::Config(format!(
                            "state {i} successor {n} must exist one turn later"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Single-stage two-player zero-sum game from the row payoff matrix.
    pub fn matrix_game(name: &str, row_payoffs: &[Vec<f64>]) -> Self {
        let mut b = Builder::new(2);
        let root = b.placeholder(0);
        let m = row_payoffs.len();
        let n = row_payoffs[0].len();
        let mut next = Vec::with_capacity(m * n);
        for row in row_payoffs {
            for &x in row {
                next.push(b.terminal(1, vec![x, -x]));
            }
        }
        b.set_decision(root, vec![m, n], next);
        Self {
            name: name.into(),
            num_players: 2,
            discount: 1.0,
            states: b.states,
            constant_sum: Some(0.0),
        }
    }

    /// `rounds` independent matching-pennies games; the row player's final
    /// reward is its net number of matches divided by `rounds`.
    pub fn iterated_pennies(rounds: usize) -> Self {
        let mut b = Builder::new(2);
        let mut layer: HashMap<i64, usize> = HashMap::new();
        layer.insert(0, b.placeholder(0));
        for round in 0..rounds {
            let last = round + 1 == rounds;
            let mut next_layer: HashMap<i64, usize> = HashMap::new();
            let mut diffs: Vec<i64> = layer.keys().copied().collect();
            diffs.sort_unstable();
            for d in diffs {
                let id = layer[&d];
                let mut next = Vec::with_capacity(4);
                for a in 0..2 {
                    for c in 0..2 {
                        let nd = d + if a == c { 1 } else { -1 };
                        let target = *next_layer.entry(nd).or_insert_with(|| {
                            if last {
                                let x = nd as f64 / rounds as f64;
                                b.terminal(round + 1, vec![x, -x])
                            } else {
                                b.placeholder(round + 1)
                            }
                        });
                        next.push(target);
                    }
                }
                b.set_decision(id, vec![2, 2], next);
            }
            layer = next_layer;
        }
        Self {
            name: format!("pennies{rounds}"),
            num_players: 2,
            discount: 1.0,
            states: b.states,
            constant_sum: Some(0.0),
        }
    }

    /// Three decision states with asymmetric stakes: the opening decides
    /// whether a low-stakes or a high-stakes subgame follows.
    pub fn chain_conflict() -> Self {
        let mut b = Builder::new(2);
        let root = b.placeholder(0);
        let low = b.placeholder(1);
        let high = b.placeholder(1);
        let quick = b.terminal(1, vec![0.25, -0.25]);
        b.set_decision(root, vec![2, 2], vec![low, quick, high, low]);
        let low_pay = [[0.5, -0.5], [-0.25, 0.25]];
        let high_pay = [[1.0, -2.0, 0.5], [-1.5, 1.0, 0.0]];
        let mut next = Vec::new();
        for row in low_pay {
            for x in row {
                next.push(b.terminal(2, vec![x, -x]));
            }
        }
        b.set_decision(low, vec![2, 2], next);
        let mut next = Vec::new();
        for row in high_pay {
            for x in row {
                next.push(b.terminal(2, vec![x, -x]));
            }
        }
        b.set_decision(high, vec![2, 3], next);
        Self {
            name: "chain".into(),
            num_players: 2,
            discount: 1.0,
            states: b.states,
            constant_sum: Some(0.0),
        }
    }

    /// Seeded layered zero-sum game. Layer `t` has `width` states (one at the
    /// root); each player has 2..=`max_actions` actions per state; terminal
    /// rewards are uniform in [-1, 1]. With `shaping`, intermediate states
    /// also carry small zero-sum rewards.
    pub fn random_zero_sum(
        seed: u64,
        turns: usize,
        width: usize,
        max_actions: usize,
        discount: f64,
        shaping: bool,
    ) -> Self {
        let mut rng = rng_from(seed);
        let mut b = Builder::new(2);
        let mut layer = vec![b.placeholder(0)];
        for t in 0..turns {
            let last = t + 1 == turns;
            let count = if last { width * 2 } else { width };
            let next_layer: Vec<usize> = (0..count)
                .map(|_| {
                    let x: f64 = if last {
                        rng.random_range(-1.0..1.0)
                    } else if shaping {
                        rng.random_range(-0.2..0.2)
                    } else {
                        0.0
                    };
                    b.terminal(t + 1, vec![x, -x])
                })
                .collect();
            for &id in &layer {
                let counts = vec![
                    rng.random_range(2..=max_actions.max(2)),
                    rng.random_range(2..=max_actions.max(2)),
                ];
                let joint = counts[0] * counts[1];
                let next = (0..joint)
                    .map(|_| next_layer[rng.random_range(0..next_layer.len())])
                    .collect();
                b.set_decision(id, counts, next);
            }
            // Unreached states in the next layer stay terminal; that is harmless.
            layer = next_layer;
            if last {
                break;
            }
        }
        Self {
            name: format!("random-{seed}"),
            num_players: 2,
            discount,
            states: b.states,
            constant_sum: Some(0.0),
        }
    }

    fn state(&self, s: usize) -> Result<&TabularState> {
        self.states
            .get(s)
            .ok_or_else(|| Error::Config(format!("unknown state {s}")))
    }
}

impl Game for TabularGame {
    type State = usize;
    type Action = usize;

    fn name(&self) -> &str {
        &self.name
    }

    fn num_players(&self) -> usize {
        self.num_players
    }

    fn initial_state(&self) -> usize {
        0
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn max_turns(&self) -> usize {
        self.states.iter().map(|s| s.turn).max().unwrap_or(0)
    }

    fn turn(&self, state: &usize) -> usize {
        self.states[*state].turn
    }

    fn is_terminal(&self, state: &usize) -> bool {
        self.states[*state].is_terminal()
    }

    fn enumerate_actions(&self, state: &usize, player: usize, cap: usize) -> Result<Vec<usize>> {
        let s = self.state(*state)?;
        if s.is_terminal() {
            return Err(Error::TerminalState);
        }
        Ok((0..s.action_counts[player].min(cap)).collect())
    }

    fn action_count(&self, state: &usize, player: usize) -> Result<u128> {
        let s = self.state(*state)?;
        if s.is_terminal() {
            return Err(Error::TerminalState);
        }
        Ok(s.action_counts[player] as u128)
    }

    fn sample_action<R: Rng + ?Sized>(&self, state: &usize, player: usize, rng: &mut R) -> Result<usize> {
        let n = self.action_count(state, player)? as usize;
        Ok(rng.random_range(0..n))
    }

    fn validate_action(&self, state: &usize, player: usize, action: &usize) -> Result<()> {
        let s = self.state(*state)?;
        if s.is_terminal() {
            return Err(Error::TerminalState);
        }
        if *action >= s.action_counts[player] {
            return Err(Error::IllegalAction {
                player,
                detail: format!("action {action} out of {}", s.action_counts[player]),
            });
        }
        Ok(())
    }

    fn next_state(&self, state: &usize, joint: &[usize]) -> Result<usize> {
        let s = self.state(*state)?;
        let mut idx = 0;
        for (a, c) in joint.iter().zip(&s.action_counts) {
            idx = idx * c + a;
        }
        Ok(s.next[idx])
    }

    fn reward(&self, state: &usize) -> Vec<f64> {
        self.states[*state].reward.clone()
    }

    fn encode_state(&self, state: &usize) -> Vec<u8> {
        (*state as u32).to_le_bytes().to_vec()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<usize> {
        let arr: [u8; 4] = bytes
            .try_into()
            .map_err(|_| Error::Checkpoint("state encoding must be 4 bytes".into()))?;
        let s = u32::from_le_bytes(arr) as usize;
        self.state(s)?;
        Ok(s)
    }

    fn encode_action(&self, action: &usize) -> Vec<u8> {
        (*action as u32).to_le_bytes().to_vec()
    }

    fn decode_action(&self, bytes: &[u8]) -> Result<usize> {
        let arr: [u8; 4] = bytes
            .try_into()
            .map_err(|_| Error::Checkpoint("action encoding must be 4 bytes".into()))?;
        Ok(u32::from_le_bytes(arr) as usize)
    }

    fn constant_sum(&self) -> Option<f64> {
        self.constant_sum
    }
}
