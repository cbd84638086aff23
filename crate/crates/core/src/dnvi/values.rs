use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::stogame::Game;

#[derive(Clone, Debug, PartialEq)]
pub struct ValueEntry {
    pub values: Vec<f64>,
    pub visits: u64,
}

/// Continuation value per state: the expected discounted reward collected
/// after the state. Terminal states are worth nothing beyond the reward
/// paid on entering them, so stage payoffs r(s') + γ·V(s') score terminal
/// successors by their exact reward.
#[derive(Clone, Debug)]
pub struct ValueTable<S> {
    entries: HashMap<S, ValueEntry>,
    default: Vec<f64>,
}

impl<S: Eq + Hash> PartialEq for ValueTable<S> {
    fn eq(&self, other: &Self) -> bool {
        self.default == other.default && self.entries == other.entries
    }
}

impl<S: Clone + Eq + Hash> ValueTable<S> {
    pub fn new(default: Vec<f64>) -> Self {
        Self {
            entries: HashMap::new(),
            default,
        }
    }

    /// Table whose unseen states read the game's default value.
    pub fn for_game<G: Game<State = S>>(game: &G) -> Self {
        Self::new(vec![game.default_value(); game.num_players()])
    }

    pub fn default_value(&self) -> &[f64] {
        &self.default
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, state: &S) -> Option<&ValueEntry> {
        self.entries.get(state)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&S, &ValueEntry)> {
        self.entries.iter()
    }

    pub fn insert(&mut self, state: S, entry: ValueEntry) {
        self.entries.insert(state, entry);
    }

    pub fn visits(&self, state: &S) -> u64 {
        self.entries.get(state).map_or(0, |e| e.visits)
    }

    /// Stored estimate, or the default for unseen states.
    pub fn get(&self, state: &S) -> &[f64] {
        self.entries.get(state).map_or(&self.default, |e| &e.values)
    }

    /// Continuation after `state`; zero at terminal states.
    pub fn continuation<G: Game<State = S>>(&self, game: &G, state: &S) -> Vec<f64> {
        if game.is_terminal(state) {
            vec![0.0; game.num_players()]
        } else {
            self.get(state).to_vec()
        }
    }

    /// `V ← (1 − α)·V + α·target` and one more visit.
    pub fn apply(&mut self, state: &S, target: &[f64], alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!("learning rate {alpha} outside (0, 1]")));
        }
        if let Some(bad) = target.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value target {bad}")));
        }
        let default = &self.default;
        let e = self.entries.entry(state.clone()).or_insert_with(|| ValueEntry {
            values: default.clone(),
            visits: 0,
        });
        for (v, t) in e.values.iter_mut().zip(target) {
            *v = (1.0 - alpha) * *v + alpha * t;
        }
        e.visits += 1;
        Ok(())
    }
}
