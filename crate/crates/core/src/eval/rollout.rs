use rand::Rng;

use crate::dnvi::ValueTable;
use crate::error::{Error, Result};
use crate::proposal::ProposalModel;
use crate::stogame::Game;

/// Monte Carlo rollout settings for state values.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutConfig {
    /// Turns played before reading the value table.
    pub depth: usize,
    pub samples: usize,
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            samples: 8,
            temperature: 0.75,
            top_p: 0.95,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("rollouts need at least one sample".into()));
        }
        if !(self.temperature > 0.0) || !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config("rollout temperature must be > 0 and top_p in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Continuation value of `state` estimated by playing `depth` turns with
/// every player sampling from the proposal model, summing discounted
/// rewards and closing with the table value of the reached state.
pub fn rollout_value<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    values: &ValueTable<G::State>,
    proposal: &ProposalModel<G::State, G::Action>,
    cfg: &RolloutConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = game.num_players();
    if cfg.depth == 0 || game.is_terminal(state) {
        return Ok(values.continuation(game, state));
    }
    let gamma = game.discount();
    let mut total = vec![0.0; n];
    for _ in 0..cfg.samples {
        let mut s = state.clone();
        let mut scale = 1.0;
        for _ in 0..cfg.depth {
            if game.is_terminal(&s) {
                break;
            }
            let joint = (0..n)
                .map(|p| proposal.sample_action(game, &s, p, cfg.temperature, cfg.top_p, rng))
                .collect::<Result<Vec<_>>>()?;
            let next = game.next_state(&s, &joint)?;
            for (t, r) in total.iter_mut().zip(game.reward(&next)) {
                *t += scale * r;
            }
            scale *= gamma;
            s = next;
        }
        for (t, v) in total.iter_mut().zip(values.continuation(game, &s)) {
            *t += scale * v;
        }
    }
    Ok(total.into_iter().map(|t| t / cfg.samples as f64).collect())
}
