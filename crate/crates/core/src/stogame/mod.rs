//! Deterministic simultaneous-move stochastic games.
//!
//! Rewards are a function of the state being entered, so a transition
//! `(s, a) -> s'` pays `reward(s')`. Value tables hold the discounted
//! continuation *after* a state; a terminal state's continuation is zero,
//! so every terminal successor is scored by its exact reward.

mod graph;
mod minimax;
mod synthetic;

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;

use crate::error::{Error, Result};

pub use graph::{JointSuccessors, ReachableGraph, DEFAULT_JOINT_CAP, DEFAULT_STATE_CAP};
pub(crate) use minimax::stage_from_graph;
pub use minimax::{backward_induction_minimax, MinimaxSolution, StagePolicy};
pub use synthetic::{TabularGame, TabularState};

/// Static description of a game instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec<S> {
    pub num_players: usize,
    pub initial_state: S,
    pub discount: f64,
    pub max_turns: usize,
}

pub trait Game: Send + Sync {
    type State: Clone + Eq + Hash + Debug + Send + Sync;
    type Action: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    fn name(&self) -> &str;
    fn num_players(&self) -> usize;
    fn initial_state(&self) -> Self::State;
    /// Discount in (0, 1].
    fn discount(&self) -> f64;
    fn max_turns(&self) -> usize;
    fn turn(&self, state: &Self::State) -> usize;
    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Up to `cap` legal actions in canonical order. Errors on terminal states.
    fn enumerate_actions(
        &self,
        state: &Self::State,
        player: usize,
        cap: usize,
    ) -> Result<Vec<Self::Action>>;

    /// Exact number of legal actions.
    fn action_count(&self, state: &Self::State, player: usize) -> Result<u128>;

    /// One legal action drawn uniformly.
    fn sample_action<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        player: usize,
        rng: &mut R,
    ) -> Result<Self::Action>;

    /// Checks that `action` is legal for `player` at `state`.
    fn validate_action(&self, state: &Self::State, player: usize, action: &Self::Action)
        -> Result<()>;

    /// Successor state; deterministic.
    fn next_state(&self, state: &Self::State, joint: &[Self::Action]) -> Result<Self::State>;

    /// Reward paid on entering `state`.
    fn reward(&self, state: &Self::State) -> Vec<f64>;

    fn encode_state(&self, state: &Self::State) -> Vec<u8>;
    fn decode_state(&self, bytes: &[u8]) -> Result<Self::State>;
    fn encode_action(&self, action: &Self::Action) -> Vec<u8>;
    fn decode_action(&self, bytes: &[u8]) -> Result<Self::Action>;

    /// Common sum of every player's payoff, when the game has one.
    fn constant_sum(&self) -> Option<f64>;

    /// Continuation estimate for states never seen by a value table.
    fn default_value(&self) -> f64 {
        match self.constant_sum() {
            Some(c) => c / self.num_players() as f64,
            None => 0.0,
        }
    }

    /// Number of map locations for local-modification sampling (0 = no locality).
    fn num_locations(&self) -> usize {
        0
    }

    /// Re-randomizes the part of `base` near `location`; other parts are kept.
    fn modify_near<R: Rng + ?Sized>(
        &self,
        _state: &Self::State,
        _player: usize,
        base: &Self::Action,
        _location: usize,
        _rng: &mut R,
    ) -> Result<Self::Action> {
        Ok(base.clone())
    }

    /// Independent decision units inside one action (orders per unit).
    fn units(&self, _state: &Self::State, _player: usize) -> usize {
        1
    }

    fn describe_action(&self, action: &Self::Action) -> String {
        format!("{action:?}")
    }

    fn spec(&self) -> GameSpec<Self::State> {
        GameSpec {
            num_players: self.num_players(),
            initial_state: self.initial_state(),
            discount: self.discount(),
            max_turns: self.max_turns(),
        }
    }

    /// All legal actions of `player`.
    fn legal_actions(&self, state: &Self::State, player: usize) -> Result<Vec<Self::Action>> {
        self.enumerate_actions(state, player, usize::MAX)
    }

    /// Validates the joint action, then steps. Returns the successor and its reward.
    fn transition(
        &self,
        state: &Self::State,
        joint: &[Self::Action],
    ) -> Result<(Self::State, Vec<f64>)> {
        if self.is_terminal(state) {
            return Err(Error::TerminalState);
        }
        if joint.len() != self.num_players() {
            return Err(Error::IllegalAction {
                player: joint.len(),
                detail: format!("joint action has {} entries for {} players", joint.len(), self.num_players()),
            });
        }
        for (p, a) in joint.iter().enumerate() {
            self.validate_action(state, p, a)?;
        }
        let next = self.next_state(state, joint)?;
        let r = self.reward(&next);
        Ok((next, r))
    }
}

/// A played game: visited states with the joint action taken at each, and
/// the reward received on each step.
#[derive(Clone, Debug)]
pub struct Trajectory<S, A> {
    pub steps: Vec<(S, Vec<A>)>,
    pub step_rewards: Vec<Vec<f64>>,
    pub final_state: S,
    /// Discounted sum of step rewards per player.
    pub returns: Vec<f64>,
}

impl<S, A> Trajectory<S, A> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Discounted return accumulator.
pub fn discounted_sum(rewards: &[Vec<f64>], discount: f64, players: usize) -> Vec<f64> {
    let mut total = vec![0.0; players];
    let mut factor = 1.0;
    for r in rewards {
        for (t, x) in total.iter_mut().zip(r) {
            *t += factor * x;
        }
        factor *= discount;
    }
    total
}
