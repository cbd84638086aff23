use std::collections::HashMap;

use super::policy::{Policy, TablePolicy};
use crate::dnvi::PolicyTarget;
use crate::error::{Error, Result};
use crate::explore::FULL_ENUMERATION_CAP;
use crate::matrix::{advance, joint_count};
use crate::rng::{derived_rng, fnv1a, STATE};
use crate::stogame::Game;

/// Limits and seed of exhaustive policy evaluation.
#[derive(Clone, Debug)]
pub struct ExactOptions {
    pub state_cap: usize,
    /// Most actions a best-responding player may enumerate at one state.
    pub action_cap: u128,
    /// Largest product of opponent supports expanded at one state.
    pub joint_cap: u128,
    /// Policies are queried once per (state, seat) with a generator keyed
    /// by this seed and the state, so every query is reproducible.
    pub seed: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            state_cap: 200_000,
            action_cap: FULL_ENUMERATION_CAP,
            joint_cap: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploitabilityReport {
    /// Value of the profile for each seat.
    pub profile: Vec<f64>,
    /// Best-response value of each seat against the others.
    pub best_responses: Vec<f64>,
    /// Sum over seats of best response minus profile value.
    pub nash_conv: f64,
}

/// Exhaustive evaluation of a seat profile, memoizing every mixture it
/// asks for so repeated queries agree.
pub struct ExactEvaluator<'a, G: Game> {
    game: &'a G,
    seats: Vec<&'a dyn Policy<G>>,
    opts: ExactOptions,
    mixtures: HashMap<(G::State, usize), PolicyTarget<G::Action>>,
}

impl<'a, G: Game> ExactEvaluator<'a, G> {
    pub fn new(game: &'a G, seats: Vec<&'a dyn Policy<G>>, opts: ExactOptions) -> Result<Self> {
        if seats.len() != game.num_players() {
            return Err(Error::Config(format!(
                "{} seats for a {}-player game",
                seats.len(),
                game.num_players()
            )));
        }
        Ok(Self {
            game,
            seats,
            opts,
            mixtures: HashMap::new(),
        })
    }

    fn mixture(&mut self, state: &G::State, player: usize) -> Result<PolicyTarget<G::Action>> {
        let key = (state.clone(), player);
        if let Some(t) = self.mixtures.get(&key) {
            return Ok(t.clone());
        }
        let h = fnv1a(&self.game.encode_state(state)) ^ (player as u64).wrapping_mul(0x9e37_79b9);
        let mut rng = derived_rng(self.opts.seed, STATE, h);
        let t = self.seats[player].policy(self.game, state, player, &mut rng)?;
        if t.actions.len() != t.probs.len() || t.actions.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "policy '{}' returned a malformed mixture",
                self.seats[player].label()
            )));
        }
        self.mixtures.insert(key, t.clone());
        Ok(t)
    }

    /// Weighted joint actions of every seat except `skip`, whose slot is
    /// left as `None`.
    fn profiles(
        &mut self,
        state: &G::State,
        skip: Option<usize>,
    ) -> Result<Vec<(f64, Vec<Option<G::Action>>)>> {
        let n = self.game.num_players();
        let mixes = (0..n)
            .map(|p| if Some(p) == skip { Ok(None) } else { self.mixture(state, p).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let counts: Vec<usize> = mixes.iter().map(|m| m.as_ref().map_or(1, |m| m.actions.len())).collect();
        let total = joint_count(&counts);
        if total > self.opts.joint_cap {
            return Err(Error::OracleSizeExceeded {
                what: "opponent joint supports",
                size: total,
                cap: self.opts.joint_cap,
            });
        }
        let mut out = Vec::new();
        let mut pos = vec![0usize; n];
        for _ in 0..total {
            let mut w = 1.0;
            let mut joint = Vec::with_capacity(n);
            for (p, m) in mixes.iter().enumerate() {
                match m {
                    Some(m) => {
                        w *= m.probs[pos[p]];
                        joint.push(Some(m.actions[pos[p]].clone()));
                    }
                    None => joint.push(None),
                }
            }
            if w > 0.0 {
                out.push((w, joint));
            }
            advance(&mut pos, &counts);
        }
        Ok(out)
    }

    fn check_size(&self, memo_len: usize) -> Result<()> {
        if memo_len > self.opts.state_cap {
            return Err(Error::OracleSizeExceeded {
                what: "states in exact evaluation",
                size: memo_len as u128,
                cap: self.opts.state_cap as u128,
            });
        }
        Ok(())
    }

    /// Expected continuation of every seat from `state` when all seats
    /// follow their policies.
    pub fn profile_value(&mut self, state: &G::State) -> Result<Vec<f64>> {
        let mut memo = HashMap::new();
        self.profile_rec(state, &mut memo)
    }

    fn profile_rec(&mut self, state: &G::State, memo: &mut HashMap<G::State, Vec<f64>>) -> Result<Vec<f64>> {
        let n = self.game.num_players();
        if self.game.is_terminal(state) {
            return Ok(vec![0.0; n]);
        }
        if let Some(v) = memo.get(state) {
            return Ok(v.clone());
        }
        let gamma = self.game.discount();
        let mut out = vec![0.0; n];
        for (w, joint) in self.profiles(state, None)? {
            let joint: Vec<G::Action> = joint.into_iter().map(Option::unwrap).collect();
            let next = self.game.next_state(state, &joint)?;
            let r = self.game.reward(&next);
            let v = self.profile_rec(&next, memo)?;
            for p in 0..n {
                out[p] += w * (r[p] + gamma * v[p]);
            }
        }
        memo.insert(state.clone(), out.clone());
        self.check_size(memo.len())?;
        Ok(out)
    }

    /// Best-response continuation of `player` from `state` against the
    /// other seats, plus the pure policy achieving it on every visited state.
    pub fn best_response(&mut self, state: &G::State, player: usize) -> Result<(f64, TablePolicy<G>)> {
        if player >= self.game.num_players() {
            return Err(Error::IllegalAction {
                player,
                detail: "no such player".into(),
            });
        }
        let mut memo = HashMap::new();
        let mut table = TablePolicy::new(format!("best-response-{player}"), None);
        let v = self.br_rec(state, player, &mut memo, &mut table)?;
        Ok((v, table))
    }

    fn br_rec(
        &mut self,
        state: &G::State,
        player: usize,
        memo: &mut HashMap<G::State, f64>,
        table: &mut TablePolicy<G>,
    ) -> Result<f64> {
        if self.game.is_terminal(state) {
            return Ok(0.0);
        }
        if let Some(v) = memo.get(state) {
            return Ok(*v);
        }
        let count = self.game.action_count(state, player)?;
        if count > self.opts.action_cap {
            return Err(Error::OracleSizeExceeded {
                what: "best-response actions",
                size: count,
                cap: self.opts.action_cap,
            });
        }
        let actions = self.game.legal_actions(state, player)?;
        let profiles = self.profiles(state, Some(player))?;
        let gamma = self.game.discount();
        let mut best: Option<(usize, f64)> = None;
        let mut joint = Vec::new();
        for (i, a) in actions.iter().enumerate() {
            let mut v = 0.0;
            for (w, prof) in &profiles {
                joint.clear();
                joint.extend(prof.iter().map(|x| x.clone().unwrap_or_else(|| a.clone())));
                let next = self.game.next_state(state, &joint)?;
                let r = self.game.reward(&next)[player];
                v += w * (r + gamma * self.br_rec(&next, player, memo, table)?);
            }
            if best.is_none_or(|(_, b)| v > b + 1e-12) {
                best = Some((i, v));
            }
        }
        let (i, v) = best.ok_or_else(|| Error::DegenerateGame("no legal actions".into()))?;
        table.set(
            state.clone(),
            player,
            PolicyTarget {
                actions: vec![actions[i].clone()],
                probs: vec![1.0],
            },
        )?;
        memo.insert(state.clone(), v);
        self.check_size(memo.len())?;
        Ok(v)
    }

    /// Profile values, best responses and NashConv at `state`.
    pub fn exploitability(&mut self, state: &G::State) -> Result<ExploitabilityReport> {
        let profile = self.profile_value(state)?;
        let best_responses = (0..self.game.num_players())
            .map(|p| self.best_response(state, p).map(|(v, _)| v))
            .collect::<Result<Vec<_>>>()?;
        let nash_conv = best_responses.iter().zip(&profile).map(|(b, v)| b - v).sum();
        Ok(ExploitabilityReport {
            profile,
            best_responses,
            nash_conv,
        })
    }
}

/// NashConv of `policy` playing every seat, from the initial state.
pub fn exploitability<G: Game>(game: &G, policy: &dyn Policy<G>, opts: ExactOptions) -> Result<ExploitabilityReport> {
    let seats = vec![policy; game.num_players()];
    ExactEvaluator::new(game, seats, opts)?.exploitability(&game.initial_state())
}
