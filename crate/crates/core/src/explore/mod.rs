//! Approximated double oracle: grows restricted candidate sets with
//! best responses found in sampled action pools.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dnvi::{PolicyTarget, StageEvaluator, StageSolver, ValueTable};
use crate::error::{Error, Result};
use crate::matrix::{advance, EquilibriumResult, MixedStrategy, RestrictedStageGame};
use crate::proposal::CandidateSet;
use crate::stogame::Game;

/// Largest action count accepted by exhaustive best responses.
pub const FULL_ENUMERATION_CAP: u128 = 100_000;
/// Opponent joint profiles evaluated exactly; above this they are sampled.
pub const OPPONENT_EXACT_CAP: u128 = 10_000;
pub const OPPONENT_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Uniform,
    Local,
    /// Every legal action; for small games and correctness checks.
    Full,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "local" => Ok(Self::Local),
            "full" => Ok(Self::Full),
            other => Err(Error::Unknown {
                kind: "generator",
                name: other.to_owned(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoConfig {
    pub pool_size: usize,
    /// Opponent mixtures are truncated to their `top_k` most likely actions.
    pub top_k: usize,
    /// Minimum gain for adding a best response.
    pub epsilon: f64,
    pub iterations: usize,
    pub generator: GeneratorKind,
    /// Base actions for local modification.
    pub base_count: usize,
    /// Regenerate pools on every iteration instead of once per call.
    pub recompute_pool: bool,
}

impl Default for DoConfig {
    fn default() -> Self {
        Self::training()
    }
}

impl DoConfig {
    pub fn training() -> Self {
        Self {
            pool_size: 1000,
            top_k: 8,
            epsilon: 0.04,
            iterations: 6,
            generator: GeneratorKind::Local,
            base_count: 4,
            recompute_pool: false,
        }
    }

    pub fn inference() -> Self {
        Self {
            pool_size: 10_000,
            top_k: 20,
            epsilon: 0.01,
            iterations: 16,
            generator: GeneratorKind::Local,
            base_count: 4,
            recompute_pool: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 || self.top_k == 0 || self.iterations == 0 || self.base_count == 0 {
            return Err(Error::Config("pool size, top-k, iterations and base count must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("double-oracle epsilon {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }
}

/// One best-response check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoLogEntry {
    pub iteration: usize,
    pub player: usize,
    /// Player's value under the current equilibrium.
    pub value: f64,
    /// Best pool value against the truncated opponent mixtures.
    pub best: f64,
    pub pool_size: usize,
    /// Index of the added action in the player's candidate set.
    pub added: Option<usize>,
    /// Equilibrium at the time of the check.
    #[serde(skip)]
    pub sigma: Vec<Vec<f64>>,
}

impl DoLogEntry {
    pub fn gain(&self) -> f64 {
        self.best - self.value
    }
}

pub struct DoOutcome<A> {
    pub candidates: Vec<CandidateSet<A>>,
    pub equilibrium: EquilibriumResult<f64>,
    /// Final restricted stage game.
    pub stage: RestrictedStageGame<f64>,
    pub log: Vec<DoLogEntry>,
}

/// Up to `pool_size` uniform draws, deduplicated in draw order.
pub fn generate_pool_uniform<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    player: usize,
    pool_size: usize,
    rng: &mut R,
) -> Result<Vec<G::Action>> {
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for _ in 0..pool_size.max(1) {
        let a = game.sample_action(state, player, rng)?;
        if seen.insert(a.clone()) {
            pool.push(a);
        }
    }
    Ok(pool)
}

/// Local modifications of the `base_count` most likely base actions at
/// uniformly drawn map locations, until `pool_size` distinct actions or
/// `10 * pool_size` attempts. Games without locations fall back to
/// uniform draws.
#[allow(clippy::too_many_arguments)]
pub fn generate_pool_local<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    player: usize,
    base: &CandidateSet<G::Action>,
    sigma: &MixedStrategy<f64>,
    pool_size: usize,
    base_count: usize,
    rng: &mut R,
) -> Result<Vec<G::Action>> {
    if base.is_empty() || sigma.len() != base.len() {
        return Err(Error::Config("local modification needs a base set with its mixture".into()));
    }
    if game.num_locations() == 0 {
        return generate_pool_uniform(game, state, player, pool_size, rng);
    }
    let top: Vec<&G::Action> = sigma
        .ranked()
        .into_iter()
        .take(base_count.max(1))
        .map(|i| &base.actions[i])
        .collect();
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    let target = pool_size.max(1);
    for _ in 0..10 * target {
        if pool.len() >= target {
            break;
        }
        let b = top[rng.random_range(0..top.len())];
        let loc = rng.random_range(0..game.num_locations());
        let a = game.modify_near(state, player, b, loc, rng)?;
        if seen.insert(a.clone()) {
            pool.push(a);
        }
    }
    Ok(pool)
}

/// Every legal action, refusing more than [`FULL_ENUMERATION_CAP`].
pub fn generate_pool_full<G: Game>(game: &G, state: &G::State, player: usize) -> Result<Vec<G::Action>> {
    let count = game.action_count(state, player)?;
    if count > FULL_ENUMERATION_CAP {
        return Err(Error::OracleSizeExceeded {
            what: "actions for full enumeration",
            size: count,
            cap: FULL_ENUMERATION_CAP,
        });
    }
    game.legal_actions(state, player)
}

/// Opponent joint profiles with weights, exact or sampled.
pub(crate) fn opponent_profiles<A: Clone, R: Rng + ?Sized>(
    player: usize,
    opponents: &[PolicyTarget<A>],
    rng: &mut R,
) -> Vec<(f64, Vec<Option<A>>)> {
    let n = opponents.len();
    let counts: Vec<usize> = (0..n)
        .map(|p| if p == player { 1 } else { opponents[p].actions.len() })
        .collect();
    let total = crate::matrix::joint_count(&counts);
    let pick = |p: usize, i: usize| if p == player { None } else { Some(opponents[p].actions[i].clone()) };
    if total <= OPPONENT_EXACT_CAP {
        let mut out = Vec::with_capacity(total as usize);
        let mut pos = vec![0usize; n];
        for _ in 0..total {
            let w: f64 = (0..n).filter(|&p| p != player).map(|p| opponents[p].probs[pos[p]]).product();
            if w > 0.0 {
                out.push((w, (0..n).map(|p| pick(p, pos[p])).collect()));
            }
            advance(&mut pos, &counts);
        }
        out
    } else {
        let w = 1.0 / OPPONENT_SAMPLES as f64;
        (0..OPPONENT_SAMPLES)
            .map(|_| {
                let joint = (0..n)
                    .map(|p| {
                        if p == player {
                            None
                        } else {
                            let i = crate::matrix::sample_index(&opponents[p].probs, rng);
                            pick(p, i)
                        }
                    })
                    .collect();
                (w, joint)
            })
            .collect()
    }
}

fn action_value<G: Game>(
    ev: &mut StageEvaluator<'_, G>,
    player: usize,
    action: &G::Action,
    profiles: &[(f64, Vec<Option<G::Action>>)],
) -> Result<f64> {
    let mut total = 0.0;
    let mut joint: Vec<G::Action> = Vec::new();
    for (w, prof) in profiles {
        joint.clear();
        joint.extend(prof.iter().map(|a| a.clone().unwrap_or_else(|| action.clone())));
        total += w * ev.payoff(&joint)?[player];
    }
    Ok(total)
}

/// Best pool action against the opponents' mixtures; ties keep the earliest.
fn best_in_pool<G: Game, R: Rng + ?Sized>(
    ev: &mut StageEvaluator<'_, G>,
    player: usize,
    pool: &[G::Action],
    opponents: &[PolicyTarget<G::Action>],
    rng: &mut R,
) -> Result<Option<(usize, f64)>> {
    let profiles = opponent_profiles(player, opponents, rng);
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in pool.iter().enumerate() {
        let v = action_value(ev, player, a, &profiles)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    Ok(best)
}

/// Mixture restricted to its `k` most likely actions and renormalized.
fn truncate(sigma: &MixedStrategy<f64>, k: usize) -> (Vec<usize>, Vec<f64>) {
    let keep: Vec<usize> = sigma.ranked().into_iter().take(k.max(1)).collect();
    let mass: f64 = keep.iter().map(|&i| sigma.probs()[i]).sum();
    let probs = keep
        .iter()
        .map(|&i| if mass > 0.0 { sigma.probs()[i] / mass } else { 1.0 / keep.len() as f64 })
        .collect();
    (keep, probs)
}

/// Exhaustive best response of `player` against the other players'
/// mixtures (the player's own entry is ignored). Ties go to the first
/// action in canonical order.
pub fn exact_best_response_full<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    player: usize,
    opponents: &[PolicyTarget<G::Action>],
    values: &ValueTable<G::State>,
    rng: &mut R,
) -> Result<(G::Action, f64)> {
    if opponents.len() != game.num_players() {
        return Err(Error::Config("one mixture per player expected".into()));
    }
    let all = generate_pool_full(game, state, player)?;
    let mut ev = StageEvaluator::new(game, state, values)?;
    let (i, v) = best_in_pool(&mut ev, player, &all, opponents, rng)?
        .ok_or_else(|| Error::DegenerateGame("no legal actions".into()))?;
    Ok((all[i].clone(), v))
}

/// Value of each pool action against the opponents' mixtures.
pub fn pool_values<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    player: usize,
    pool: &[G::Action],
    opponents: &[PolicyTarget<G::Action>],
    values: &ValueTable<G::State>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut ev = StageEvaluator::new(game, state, values)?;
    let profiles = opponent_profiles(player, opponents, rng);
    pool.iter().map(|a| action_value(&mut ev, player, a, &profiles)).collect()
}

fn solve<G: Game, R: Rng + ?Sized>(
    ev: &mut StageEvaluator<'_, G>,
    candidates: &[CandidateSet<G::Action>],
    solver: &StageSolver,
    rng: &mut R,
) -> Result<(RestrictedStageGame<f64>, EquilibriumResult<f64>)> {
    let lists: Vec<&[G::Action]> = candidates.iter().map(|c| c.actions.as_slice()).collect();
    let stage = ev.stage(&lists)?;
    let eq = solver.solve(&stage, rng)?;
    Ok((stage, eq))
}

/// Double oracle over restricted candidate sets. Players are checked one
/// at a time; a pool best response that beats the player's equilibrium
/// value by more than `epsilon` is added and the equilibrium recomputed
/// at once. Stops after `iterations` rounds or a round without additions.
pub fn find_equilibrium_with_do<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    initial: Vec<CandidateSet<G::Action>>,
    values: &ValueTable<G::State>,
    cfg: &DoConfig,
    solver: &StageSolver,
    rng: &mut R,
) -> Result<DoOutcome<G::Action>> {
    cfg.validate()?;
    let n = game.num_players();
    if initial.len() != n || initial.iter().any(CandidateSet::is_empty) {
        return Err(Error::Config("double oracle needs a non-empty candidate set per player".into()));
    }
    let mut candidates = initial;
    let mut ev = StageEvaluator::new(game, state, values)?;
    let (mut stage, mut eq) = solve(&mut ev, &candidates, solver, rng)?;
    let mut pools: Vec<Option<Vec<G::Action>>> = vec![None; n];
    let mut log = Vec::new();
    for iteration in 0..cfg.iterations {
        let mut modified = false;
        for player in 0..n {
            if cfg.recompute_pool || pools[player].is_none() {
                let pool = match cfg.generator {
                    GeneratorKind::Uniform => generate_pool_uniform(game, state, player, cfg.pool_size, rng)?,
                    GeneratorKind::Local => generate_pool_local(
                        game,
                        state,
                        player,
                        &candidates[player],
                        &eq.strategies[player],
                        cfg.pool_size,
                        cfg.base_count,
                        rng,
                    )?,
                    GeneratorKind::Full => generate_pool_full(game, state, player)?,
                };
                pools[player] = Some(pool);
            }
            let pool = pools[player].as_ref().unwrap();
            let opponents: Vec<PolicyTarget<G::Action>> = (0..n)
                .map(|p| {
                    let (keep, probs) = truncate(&eq.strategies[p], cfg.top_k);
                    PolicyTarget {
                        actions: keep.iter().map(|&i| candidates[p].actions[i].clone()).collect(),
                        probs,
                    }
                })
                .collect();
            let value = eq.values[player];
            let Some((best_i, best)) = best_in_pool(&mut ev, player, pool, &opponents, rng)? else {
                continue;
            };
            let mut entry = DoLogEntry {
                iteration,
                player,
                value,
                best,
                pool_size: pool.len(),
                added: None,
                sigma: eq.strategies.iter().map(|s| s.probs().to_vec()).collect(),
            };
            if best - value > cfg.epsilon && !candidates[player].contains(&pool[best_i]) {
                let a = pool[best_i].clone();
                entry.added = Some(candidates[player].push(a, 0.0));
                (stage, eq) = solve(&mut ev, &candidates, solver, rng)?;
                modified = true;
            }
            log.push(entry);
        }
        if !modified {
            break;
        }
    }
    Ok(DoOutcome {
        candidates,
        equilibrium: eq,
        stage,
        log,
    })
}
