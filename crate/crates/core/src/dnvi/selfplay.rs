use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stage::{nash_target, StageEvaluator, StageSolver, TrainTarget};
use super::values::ValueTable;
use crate::error::{Error, Result};
use crate::explore::{find_equilibrium_with_do, DoConfig, DoLogEntry};
use crate::matrix::MixedStrategy;
use crate::proposal::{CandidateSet, ProposalModel, DEFAULT_NUM_CANDIDATES, DEFAULT_NUM_SAMPLES};
use crate::stogame::{discounted_sum, Game, Trajectory};

/// Probability of playing a uniform candidate instead of the equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreSchedule {
    pub base: f64,
    /// Overrides for the first turns, in order.
    pub first_turns: Vec<f64>,
}

impl ExploreSchedule {
    pub fn new(base: f64, first_turns: Vec<f64>) -> Result<Self> {
        if std::iter::once(&base).chain(&first_turns).any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Config("exploration rates must lie in [0, 1]".into()));
        }
        Ok(Self { base, first_turns })
    }

    pub fn constant(eps: f64) -> Result<Self> {
        Self::new(eps, Vec::new())
    }

    /// 0.1 after the opening; 0.8 then 0.5 on the first two turns of
    /// two-player games, 0.3 then 0.2 with more players.
    pub fn for_players(players: usize) -> Self {
        let first = if players <= 2 { vec![0.8, 0.5] } else { vec![0.3, 0.2] };
        Self {
            base: 0.1,
            first_turns: first,
        }
    }

    pub fn epsilon(&self, turn: usize) -> f64 {
        self.first_turns.get(turn).copied().unwrap_or(self.base)
    }
}

#[derive(Clone, Debug)]
pub struct SelfPlayConfig {
    pub num_samples: usize,
    pub num_candidates: usize,
    pub per_unit_cap: Option<usize>,
    pub solver: StageSolver,
    pub schedule: ExploreSchedule,
    pub double_oracle: Option<DoConfig>,
}

impl SelfPlayConfig {
    pub fn for_players(players: usize) -> Self {
        Self {
            num_samples: DEFAULT_NUM_SAMPLES,
            num_candidates: DEFAULT_NUM_CANDIDATES,
            per_unit_cap: None,
            solver: StageSolver::default(),
            schedule: ExploreSchedule::for_players(players),
            double_oracle: None,
        }
    }
}

/// Trajectory of one game with the targets recorded on the way.
#[derive(Clone, Debug)]
pub struct Episode<S, A> {
    pub trajectory: Trajectory<S, A>,
    pub targets: Vec<TrainTarget<S, A>>,
    /// Actions added by double oracle over the episode.
    pub do_added: usize,
    pub do_calls: usize,
    /// Best-response checks of every double-oracle call, in order.
    pub do_log: Vec<DoLogEntry>,
}

/// Candidates, equilibrium and target at one state.
pub struct SolvedState<S, A> {
    pub candidates: Vec<CandidateSet<A>>,
    pub sigma: Vec<MixedStrategy<f64>>,
    pub target: TrainTarget<S, A>,
    pub do_added: usize,
    pub do_log: Vec<DoLogEntry>,
}

/// Proposal candidates (optionally grown by double oracle), solved.
pub fn solve_state<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    values: &ValueTable<G::State>,
    proposal: &ProposalModel<G::State, G::Action>,
    cfg: &SelfPlayConfig,
    generation: u64,
    rng: &mut R,
) -> Result<SolvedState<G::State, G::Action>> {
    let candidates = (0..game.num_players())
        .map(|p| {
            proposal.candidates(
                game,
                state,
                p,
                cfg.num_samples,
                cfg.num_candidates,
                cfg.per_unit_cap,
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    solve_candidates(game, state, candidates, values, cfg, generation, rng)
}

/// Solves the stage game over given candidates, growing them by double
/// oracle when configured.
pub fn solve_candidates<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    mut candidates: Vec<CandidateSet<G::Action>>,
    values: &ValueTable<G::State>,
    cfg: &SelfPlayConfig,
    generation: u64,
    rng: &mut R,
) -> Result<SolvedState<G::State, G::Action>> {
    let (sigma, stage, do_added, do_log) = match &cfg.double_oracle {
        Some(do_cfg) => {
            let out = find_equilibrium_with_do(game, state, candidates, values, do_cfg, &cfg.solver, rng)?;
            candidates = out.candidates;
            let added = out.log.iter().filter(|e| e.added.is_some()).count();
            (out.equilibrium.strategies, out.stage, added, out.log)
        }
        None => {
            let mut ev = StageEvaluator::new(game, state, values)?;
            let lists: Vec<&[G::Action]> = candidates.iter().map(|c| c.actions.as_slice()).collect();
            let stage = ev.stage(&lists)?;
            let eq = cfg.solver.solve(&stage, rng)?;
            (eq.strategies, stage, 0, Vec::new())
        }
    };
    let target = nash_target::<G, R>(state, &candidates, &sigma, &stage, &cfg.solver, generation, rng)?;
    Ok(SolvedState {
        candidates,
        sigma,
        target,
        do_added,
        do_log,
    })
}

/// Plays one ε-Nash self-play game from the initial state. Each player
/// independently plays its equilibrium mixture with probability 1 − ε(turn)
/// and a uniform candidate otherwise.
pub fn selfplay_episode<G: Game, R: Rng + ?Sized>(
    game: &G,
    values: &ValueTable<G::State>,
    proposal: &ProposalModel<G::State, G::Action>,
    cfg: &SelfPlayConfig,
    generation: u64,
    rng: &mut R,
) -> Result<Episode<G::State, G::Action>> {
    let mut state = game.initial_state();
    let mut steps = Vec::new();
    let mut step_rewards = Vec::new();
    let mut targets = Vec::new();
    let (mut do_added, mut do_calls) = (0, 0);
    let mut do_log = Vec::new();
    while !game.is_terminal(&state) && steps.len() < game.max_turns() {
        let solved = solve_state(game, &state, values, proposal, cfg, generation, rng)?;
        do_added += solved.do_added;
        do_calls += cfg.double_oracle.is_some() as usize;
        do_log.extend(solved.do_log);
        let eps = cfg.schedule.epsilon(game.turn(&state));
        let joint: Vec<G::Action> = solved
            .candidates
            .iter()
            .zip(&solved.sigma)
            .map(|(c, s)| {
                let i = if rng.random_bool(eps) {
                    rng.random_range(0..c.len())
                } else {
                    s.sample(rng)
                };
                c.actions[i].clone()
            })
            .collect();
        targets.push(solved.target);
        let (next, r) = game.transition(&state, &joint)?;
        steps.push((state, joint));
        step_rewards.push(r);
        state = next;
    }
    let returns = discounted_sum(&step_rewards, game.discount(), game.num_players());
    Ok(Episode {
        trajectory: Trajectory {
            steps,
            step_rewards,
            final_state: state,
            returns,
        },
        targets,
        do_added,
        do_calls,
        do_log,
    })
}

/// Pretraining game: candidates are `num_candidates` uniform draws from the
/// legal actions, play follows the restricted equilibrium, and every value
/// target is the realized discounted reward collected after its state.
pub fn pretrain_episode<G: Game, R: Rng + ?Sized>(
    game: &G,
    values: &ValueTable<G::State>,
    num_candidates: usize,
    solver: &StageSolver,
    generation: u64,
    rng: &mut R,
) -> Result<(Trajectory<G::State, G::Action>, Vec<TrainTarget<G::State, G::Action>>)> {
    let mut state = game.initial_state();
    let mut steps = Vec::new();
    let mut step_rewards = Vec::new();
    let mut targets = Vec::new();
    while !game.is_terminal(&state) && steps.len() < game.max_turns() {
        let candidates = (0..game.num_players())
            .map(|p| {
                let draws = (0..num_candidates.max(1))
                    .map(|_| game.sample_action(&state, p, rng))
                    .collect::<Result<Vec<_>>>()?;
                CandidateSet::from_actions(draws)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ev = StageEvaluator::new(game, &state, values)?;
        let lists: Vec<&[G::Action]> = candidates.iter().map(|c| c.actions.as_slice()).collect();
        let stage = ev.stage(&lists)?;
        let eq = solver.solve(&stage, rng)?;
        let joint: Vec<G::Action> = candidates
            .iter()
            .zip(&eq.strategies)
            .map(|(c, s)| c.actions[s.sample(rng)].clone())
            .collect();
        let mut t = nash_target::<G, R>(&state, &candidates, &eq.strategies, &stage, solver, generation, rng)?;
        t.values.clear();
        targets.push(t);
        let (next, r) = game.transition(&state, &joint)?;
        steps.push((state, joint));
        step_rewards.push(r);
        state = next;
    }
    let n = game.num_players();
    for (t, target) in targets.iter_mut().enumerate() {
        target.values = discounted_sum(&step_rewards[t..], game.discount(), n);
    }
    let returns = discounted_sum(&step_rewards, game.discount(), n);
    Ok((
        Trajectory {
            steps,
            step_rewards,
            final_state: state,
            returns,
        },
        targets,
    ))
}
