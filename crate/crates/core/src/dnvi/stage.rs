use std::collections::HashMap;

use rand::Rng;

use super::values::ValueTable;
use crate::error::{Error, Result};
use crate::matrix::{
    exact_ne_2p0s, expected_payoffs, solve_restricted, EquilibriumResult, MixedStrategy,
    RestrictedStageGame, SolverConfig,
};
use crate::proposal::CandidateSet;
use crate::stogame::Game;

/// How restricted stage games are solved.
#[derive(Clone, Debug, PartialEq)]
pub enum StageSolver {
    RegretMatching(SolverConfig),
    /// Simplex minimax; two-player constant-sum stage games only.
    Exact,
}

impl Default for StageSolver {
    fn default() -> Self {
        Self::RegretMatching(SolverConfig::default())
    }
}

impl StageSolver {
    pub fn solve<R: Rng + ?Sized>(
        &self,
        game: &RestrictedStageGame<f64>,
        rng: &mut R,
    ) -> Result<EquilibriumResult<f64>> {
        match self {
            Self::RegretMatching(cfg) => solve_restricted(game, cfg, rng),
            Self::Exact => exact_ne_2p0s(game),
        }
    }

    /// Joint-action count up to which expectations are exact.
    pub fn exact_cap(&self) -> u128 {
        match self {
            Self::RegretMatching(cfg) => cfg.exact_cap,
            Self::Exact => SolverConfig::default().exact_cap,
        }
    }

    pub fn mc_samples(&self) -> usize {
        match self {
            Self::RegretMatching(cfg) => cfg.mc_samples,
            Self::Exact => SolverConfig::default().mc_samples,
        }
    }
}

/// Evaluates r(f(s,a)) + γ·V(f(s,a)) for joint actions at one state,
/// memoizing every joint action it has seen.
pub struct StageEvaluator<'a, G: Game> {
    pub game: &'a G,
    pub state: &'a G::State,
    pub values: &'a ValueTable<G::State>,
    memo: HashMap<Vec<G::Action>, Vec<f64>>,
    transitions: usize,
}

impl<'a, G: Game> StageEvaluator<'a, G> {
    pub fn new(game: &'a G, state: &'a G::State, values: &'a ValueTable<G::State>) -> Result<Self> {
        if game.is_terminal(state) {
            return Err(Error::TerminalState);
        }
        Ok(Self {
            game,
            state,
            values,
            memo: HashMap::new(),
            transitions: 0,
        })
    }

    /// Distinct joint actions evaluated so far.
    pub fn transitions(&self) -> usize {
        self.transitions
    }

    pub fn payoff(&mut self, joint: &[G::Action]) -> Result<Vec<f64>> {
        if let Some(v) = self.memo.get(joint) {
            return Ok(v.clone());
        }
        let next = self.game.next_state(self.state, joint)?;
        let r = self.game.reward(&next);
        let cont = self.values.continuation(self.game, &next);
        let g = self.game.discount();
        let v: Vec<f64> = r.iter().zip(&cont).map(|(r, c)| r + g * c).collect();
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("stage payoff {bad}")));
        }
        self.transitions += 1;
        self.memo.insert(joint.to_vec(), v.clone());
        Ok(v)
    }

    /// Dense payoff tensor over the given per-player action lists.
    pub fn stage(&mut self, actions: &[&[G::Action]]) -> Result<RestrictedStageGame<f64>> {
        let counts: Vec<usize> = actions.iter().map(|a| a.len()).collect();
        let mut payoffs = Vec::new();
        let mut pos = vec![0usize; counts.len()];
        let total = crate::matrix::joint_count(&counts);
        if total > SolverConfig::default().exact_cap {
            return Err(Error::OracleSizeExceeded {
                what: "stage game joint actions",
                size: total,
                cap: SolverConfig::default().exact_cap,
            });
        }
        for _ in 0..total {
            let joint: Vec<G::Action> = pos.iter().enumerate().map(|(p, &i)| actions[p][i].clone()).collect();
            payoffs.push(self.payoff(&joint)?);
            crate::matrix::advance(&mut pos, &counts);
        }
        let mut it = payoffs.into_iter();
        RestrictedStageGame::from_fn(counts, |_| Ok(it.next().unwrap()))
    }
}

/// Restricted stage game over the candidate sets.
pub fn stage_game<G: Game>(
    game: &G,
    state: &G::State,
    candidates: &[CandidateSet<G::Action>],
    values: &ValueTable<G::State>,
) -> Result<RestrictedStageGame<f64>> {
    let mut ev = StageEvaluator::new(game, state, values)?;
    let lists: Vec<&[G::Action]> = candidates.iter().map(|c| c.actions.as_slice()).collect();
    ev.stage(&lists)
}

/// One player's equilibrium mixture over its candidate actions.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTarget<A> {
    pub actions: Vec<A>,
    pub probs: Vec<f64>,
}

/// Value and policy targets computed at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainTarget<S, A> {
    pub state: S,
    pub values: Vec<f64>,
    pub policies: Vec<PolicyTarget<A>>,
    pub generation: u64,
}

/// Expected stage payoff under `sigma` (exact below the joint cap).
pub fn nash_target<G: Game, R: Rng + ?Sized>(
    state: &G::State,
    candidates: &[CandidateSet<G::Action>],
    sigma: &[MixedStrategy<f64>],
    stage: &RestrictedStageGame<f64>,
    solver: &StageSolver,
    generation: u64,
    rng: &mut R,
) -> Result<TrainTarget<G::State, G::Action>> {
    let (values, _) = expected_payoffs(stage, sigma, solver.exact_cap(), solver.mc_samples(), rng)?;
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("value target {bad}")));
    }
    Ok(TrainTarget {
        state: state.clone(),
        values,
        policies: candidates
            .iter()
            .zip(sigma)
            .map(|(c, s)| PolicyTarget {
                actions: c.actions.clone(),
                probs: s.probs().to_vec(),
            })
            .collect(),
        generation,
    })
}

/// Computes the target under `sigma` and moves the table toward it.
#[allow(clippy::too_many_arguments)]
pub fn nash_value_update<G: Game, R: Rng + ?Sized>(
    values: &mut ValueTable<G::State>,
    state: &G::State,
    candidates: &[CandidateSet<G::Action>],
    sigma: &[MixedStrategy<f64>],
    stage: &RestrictedStageGame<f64>,
    alpha: f64,
    solver: &StageSolver,
    rng: &mut R,
) -> Result<TrainTarget<G::State, G::Action>> {
    let t = nash_target::<G, R>(state, candidates, sigma, stage, solver, 0, rng)?;
    values.apply(state, &t.values, alpha)?;
    Ok(t)
}
