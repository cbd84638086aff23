use std::collections::HashMap;
use std::sync::Arc;

use rand::RngCore;

use super::rollout::{rollout_value, RolloutConfig};
use crate::dnvi::{solve_candidates, PolicyTarget, SelfPlayConfig, StageSolver, ValueEntry, ValueTable};
use crate::error::{Error, Result};
use crate::explore::DoConfig;
use crate::matrix::{advance, joint_count};
use crate::proposal::{ProposalModel, DEFAULT_NUM_CANDIDATES, DEFAULT_NUM_SAMPLES};
use crate::stogame::{Game, MinimaxSolution};

/// Anything that maps a state to a mixture over actions for one seat.
pub trait Policy<G: Game>: Send + Sync {
    fn label(&self) -> &str;

    fn policy(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>>;

    /// Value model behind the policy, used for luck deltas.
    fn value_model(&self) -> Option<&ValueTable<G::State>> {
        None
    }
}

/// Candidate generation and stage-solving parameters of a search agent.
#[derive(Clone, Debug)]
pub struct SearchParams {
    pub num_samples: usize,
    pub num_candidates: usize,
    pub per_unit_cap: Option<usize>,
    pub solver: StageSolver,
    pub double_oracle: Option<DoConfig>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            num_samples: DEFAULT_NUM_SAMPLES,
            num_candidates: DEFAULT_NUM_CANDIDATES,
            per_unit_cap: None,
            solver: StageSolver::default(),
            double_oracle: None,
        }
    }
}

impl SearchParams {
    pub(crate) fn selfplay(&self) -> SelfPlayConfig {
        SelfPlayConfig {
            num_samples: self.num_samples,
            num_candidates: self.num_candidates,
            per_unit_cap: self.per_unit_cap,
            solver: self.solver.clone(),
            schedule: crate::dnvi::ExploreSchedule::constant(0.0).expect("zero is a valid rate"),
            double_oracle: self.double_oracle.clone(),
        }
    }
}

/// Search agent: proposal candidates, equilibrium of the stage game under
/// its own value model, optional double oracle or rollout values.
pub struct AgentHandle<G: Game> {
    label: String,
    proposal: Arc<ProposalModel<G::State, G::Action>>,
    values: Arc<ValueTable<G::State>>,
    search: SearchParams,
    rollout: Option<RolloutConfig>,
}

impl<G: Game> Clone for AgentHandle<G> {
    fn clone(&self) -> Self {
        Self {
            label: self.label.clone(),
            proposal: Arc::clone(&self.proposal),
            values: Arc::clone(&self.values),
            search: self.search.clone(),
            rollout: self.rollout.clone(),
        }
    }
}

impl<G: Game> AgentHandle<G> {
    pub fn new(
        label: impl Into<String>,
        proposal: Arc<ProposalModel<G::State, G::Action>>,
        values: Arc<ValueTable<G::State>>,
        search: SearchParams,
        rollout: Option<RolloutConfig>,
    ) -> Result<Self> {
        if rollout.is_some() && search.double_oracle.is_some() {
            return Err(Error::Config("rollout values and double oracle cannot be combined".into()));
        }
        if let Some(r) = &rollout {
            r.validate()?;
        }
        if let Some(d) = &search.double_oracle {
            d.validate()?;
        }
        Ok(Self {
            label: label.into(),
            proposal,
            values,
            search,
            rollout,
        })
    }

    pub fn proposal(&self) -> &ProposalModel<G::State, G::Action> {
        &self.proposal
    }

    pub fn values(&self) -> &ValueTable<G::State> {
        &self.values
    }

    pub fn search(&self) -> &SearchParams {
        &self.search
    }

    pub fn rollout(&self) -> Option<&RolloutConfig> {
        self.rollout.as_ref()
    }

    /// Equilibrium mixtures of every player at `state`.
    pub fn solve(
        &self,
        game: &G,
        state: &G::State,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<PolicyTarget<G::Action>>> {
        let cfg = self.search.selfplay();
        let candidates = (0..game.num_players())
            .map(|p| {
                self.proposal.candidates(
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
        let overlay;
        let values = match &self.rollout {
            None => &*self.values,
            Some(r) => {
                overlay = self.rollout_overlay(game, state, &candidates, r, rng)?;
                &overlay
            }
        };
        let solved = solve_candidates(game, state, candidates, values, &cfg, 0, rng)?;
        Ok(solved.target.policies)
    }

    /// Table holding rollout estimates for every successor of the
    /// candidate joint actions.
    fn rollout_overlay(
        &self,
        game: &G,
        state: &G::State,
        candidates: &[crate::proposal::CandidateSet<G::Action>],
        cfg: &RolloutConfig,
        rng: &mut dyn RngCore,
    ) -> Result<ValueTable<G::State>> {
        let mut out = ValueTable::new(self.values.default_value().to_vec());
        let counts: Vec<usize> = candidates.iter().map(|c| c.len()).collect();
        let mut pos = vec![0usize; counts.len()];
        for _ in 0..joint_count(&counts) {
            let joint: Vec<G::Action> = pos
                .iter()
                .enumerate()
                .map(|(p, &i)| candidates[p].actions[i].clone())
                .collect();
            advance(&mut pos, &counts);
            let next = game.next_state(state, &joint)?;
            if game.is_terminal(&next) || out.entry(&next).is_some() {
                continue;
            }
            let v = rollout_value(game, &next, &self.values, &self.proposal, cfg, rng)?;
            out.insert(next, ValueEntry { values: v, visits: cfg.samples as u64 });
        }
        Ok(out)
    }
}

impl<G: Game> Policy<G> for AgentHandle<G> {
    fn label(&self) -> &str {
        &self.label
    }

    fn policy(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>> {
        let mut all = self.solve(game, state, rng)?;
        if player >= all.len() {
            return Err(Error::IllegalAction {
                player,
                detail: "no such player".into(),
            });
        }
        Ok(all.swap_remove(player))
    }

    fn value_model(&self) -> Option<&ValueTable<G::State>> {
        Some(&self.values)
    }
}

/// Plays the exact minimax stage strategies of a solved game.
pub struct MinimaxPolicy<G: Game> {
    label: String,
    solution: Arc<MinimaxSolution<G>>,
}

impl<G: Game> MinimaxPolicy<G> {
    pub fn new(label: impl Into<String>, solution: Arc<MinimaxSolution<G>>) -> Self {
        Self {
            label: label.into(),
            solution,
        }
    }
}

impl<G: Game> Policy<G> for MinimaxPolicy<G> {
    fn label(&self) -> &str {
        &self.label
    }

    fn policy(
        &self,
        _game: &G,
        state: &G::State,
        player: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>> {
        let sp = self
            .solution
            .policy(state)
            .ok_or_else(|| Error::Config(format!("state outside the solved graph: {state:?}")))?;
        let (actions, strat) = sp
            .actions
            .get(player)
            .zip(sp.strategies.get(player))
            .ok_or(Error::IllegalAction {
                player,
                detail: "no such player".into(),
            })?;
        Ok(PolicyTarget {
            actions: actions.clone(),
            probs: strat.probs().to_vec(),
        })
    }
}

/// Fixed mixtures at listed (state, player) pairs, deferring elsewhere.
pub struct TablePolicy<G: Game> {
    label: String,
    table: HashMap<(G::State, usize), PolicyTarget<G::Action>>,
    fallback: Option<Arc<dyn Policy<G>>>,
}

impl<G: Game> TablePolicy<G> {
    pub fn new(label: impl Into<String>, fallback: Option<Arc<dyn Policy<G>>>) -> Self {
        Self {
            label: label.into(),
            table: HashMap::new(),
            fallback,
        }
    }

    pub fn set(&mut self, state: G::State, player: usize, target: PolicyTarget<G::Action>) -> Result<()> {
        crate::matrix::MixedStrategy::new(target.probs.clone())?;
        if target.actions.len() != target.probs.len() {
            return Err(Error::InvalidDistribution("one probability per action".into()));
        }
        self.table.insert((state, player), target);
        Ok(())
    }
}

impl<G: Game> Policy<G> for TablePolicy<G> {
    fn label(&self) -> &str {
        &self.label
    }

    fn policy(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>> {
        if let Some(t) = self.table.get(&(state.clone(), player)) {
            return Ok(t.clone());
        }
        match &self.fallback {
            Some(f) => f.policy(game, state, player, rng),
            None => Err(Error::Config(format!("no policy entry for player {player} at {state:?}"))),
        }
    }

    fn value_model(&self) -> Option<&ValueTable<G::State>> {
        self.fallback.as_ref().and_then(|f| f.value_model())
    }
}

/// Uniform over every legal action (refuses more than `cap` actions).
pub struct UniformPolicy {
    pub cap: usize,
}

impl<G: Game> Policy<G> for UniformPolicy {
    fn label(&self) -> &str {
        "uniform"
    }

    fn policy(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>> {
        let n = game.action_count(state, player)?;
        if n > self.cap as u128 {
            return Err(Error::OracleSizeExceeded {
                what: "actions for a uniform policy",
                size: n,
                cap: self.cap as u128,
            });
        }
        let actions = game.legal_actions(state, player)?;
        let p = 1.0 / actions.len() as f64;
        Ok(PolicyTarget {
            probs: vec![p; actions.len()],
            actions,
        })
    }
}

/// Always the first legal action in canonical order.
pub struct FirstActionPolicy;

impl<G: Game> Policy<G> for FirstActionPolicy {
    fn label(&self) -> &str {
        "first-action"
    }

    fn policy(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyTarget<G::Action>> {
        let a = game
            .enumerate_actions(state, player, 1)?
            .pop()
            .ok_or_else(|| Error::DegenerateGame("no legal actions".into()))?;
        Ok(PolicyTarget {
            actions: vec![a],
            probs: vec![1.0],
        })
    }
}

/// Mean of several mixtures, merged over the union of their actions.
pub fn average_policies<A: Clone + Eq + std::hash::Hash>(parts: &[PolicyTarget<A>]) -> Result<PolicyTarget<A>> {
    if parts.is_empty() {
        return Err(Error::InvalidDistribution("nothing to average".into()));
    }
    let mut index: HashMap<A, usize> = HashMap::new();
    let mut out = PolicyTarget {
        actions: Vec::new(),
        probs: Vec::new(),
    };
    let w = 1.0 / parts.len() as f64;
    for part in parts {
        for (a, p) in part.actions.iter().zip(&part.probs) {
            let i = *index.entry(a.clone()).or_insert_with(|| {
                out.actions.push(a.clone());
                out.probs.push(0.0);
                out.actions.len() - 1
            });
            out.probs[i] += w * p;
        }
    }
    Ok(out)
}

/// Index drawn from a policy's probabilities.
pub fn sample_policy<A>(target: &PolicyTarget<A>, rng: &mut dyn RngCore) -> usize {
    crate::matrix::sample_index(&target.probs, rng)
}
