use std::sync::Arc;

use rand::{Rng, RngCore};

use super::policy::{average_policies, sample_policy, Policy};
use crate::dnvi::{ExploreSchedule, PolicyTarget, StageEvaluator, ValueTable};
use crate::error::{Error, Result};
use crate::explore::{
    generate_pool_full, generate_pool_local, generate_pool_uniform, opponent_profiles, pool_values, DoConfig,
    GeneratorKind,
};
use crate::matrix::MixedStrategy;
use crate::proposal::{CandidateSet, ProposalModel, DEFAULT_NUM_CANDIDATES, DEFAULT_NUM_SAMPLES, DEFAULT_SMOOTHING};
use crate::stogame::Game;

#[derive(Clone, Debug)]
pub struct ExploiterConfig {
    pub episodes: usize,
    pub num_samples: usize,
    pub num_candidates: usize,
    /// One-sided regret matching iterations per state.
    pub rm_iterations: usize,
    /// Value learning rate c / (c + visits).
    pub alpha_c: f64,
    pub schedule: ExploreSchedule,
    /// Action discovery for the exploiter against the victim's mixture.
    pub double_oracle: Option<DoConfig>,
    /// Victim computations averaged into the victim model.
    pub victim_samples: usize,
}

impl Default for ExploiterConfig {
    fn default() -> Self {
        Self {
            episodes: 2000,
            num_samples: DEFAULT_NUM_SAMPLES,
            num_candidates: DEFAULT_NUM_CANDIDATES,
            rm_iterations: 500,
            alpha_c: 4.0,
            schedule: ExploreSchedule {
                base: 0.2,
                first_turns: Vec::new(),
            },
            double_oracle: None,
            victim_samples: 3,
        }
    }
}

impl ExploiterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.num_samples == 0 || self.num_candidates == 0 {
            return Err(Error::Config("exploiter counts must be positive".into()));
        }
        if self.rm_iterations == 0 || self.victim_samples == 0 {
            return Err(Error::Config("exploiter needs RM iterations and victim samples".into()));
        }
        if !(self.alpha_c > 0.0) {
            return Err(Error::Config("alpha_c must be positive".into()));
        }
        if let Some(d) = &self.double_oracle {
            d.validate()?;
        }
        Ok(())
    }
}

/// Best-response learner against a frozen victim. At every state the
/// victim's mixture comes from the victim itself; only the exploiter runs
/// regret matching, against victim actions sampled from that mixture.
pub struct ExploiterAgent<G: Game> {
    label: String,
    victim: Arc<dyn Policy<G>>,
    values: Arc<ValueTable<G::State>>,
    proposal: Arc<ProposalModel<G::State, G::Action>>,
    cfg: ExploiterConfig,
}

/// Exploiter reply at one state.
pub struct Reply<A> {
    pub candidates: CandidateSet<A>,
    pub policy: Vec<f64>,
    /// Expected stage value of every seat under the reply.
    pub values: Vec<f64>,
    pub victim: Vec<PolicyTarget<A>>,
    pub added: usize,
}

impl<G: Game> ExploiterAgent<G> {
    pub fn values(&self) -> &ValueTable<G::State> {
        &self.values
    }

    pub fn proposal(&self) -> &ProposalModel<G::State, G::Action> {
        &self.proposal
    }

    pub fn victim(&self) -> &Arc<dyn Policy<G>> {
        &self.victim
    }

    pub fn reply(
        &self,
        game: &G,
        state: &G::State,
        player: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Reply<G::Action>> {
        reply(game, state, player, &*self.victim, &self.values, &self.proposal, &self.cfg, rng)
    }
}

impl<G: Game> Policy<G> for ExploiterAgent<G> {
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
        let r = self.reply(game, state, player, rng)?;
        Ok(PolicyTarget {
            actions: r.candidates.actions,
            probs: r.policy,
        })
    }

    fn value_model(&self) -> Option<&ValueTable<G::State>> {
        Some(&self.values)
    }
}

/// Victim mixtures for every seat but `player`, each the mean of
/// `samples` independent victim computations.
pub fn victim_model<G: Game>(
    game: &G,
    state: &G::State,
    player: usize,
    victim: &dyn Policy<G>,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<PolicyTarget<G::Action>>> {
    (0..game.num_players())
        .map(|p| {
            if p == player {
                return Ok(PolicyTarget {
                    actions: Vec::new(),
                    probs: Vec::new(),
                });
            }
            let parts = (0..samples.max(1))
                .map(|_| victim.policy(game, state, p, rng))
                .collect::<Result<Vec<_>>>()?;
            average_policies(&parts)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn reply<G: Game>(
    game: &G,
    state: &G::State,
    player: usize,
    victim: &dyn Policy<G>,
    values: &ValueTable<G::State>,
    proposal: &ProposalModel<G::State, G::Action>,
    cfg: &ExploiterConfig,
    rng: &mut dyn RngCore,
) -> Result<Reply<G::Action>> {
    let n = game.num_players();
    let model = victim_model(game, state, player, victim, cfg.victim_samples, rng)?;
    let mut candidates = proposal.candidates(game, state, player, cfg.num_samples, cfg.num_candidates, None, rng)?;
    let mut added = 0;
    if let Some(d) = &cfg.double_oracle {
        for _ in 0..d.iterations {
            let own = pool_values(game, state, player, &candidates.actions, &model, values, rng)?;
            let (best_i, base) = own
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
            let pool = match d.generator {
                GeneratorKind::Uniform => generate_pool_uniform(game, state, player, d.pool_size, rng)?,
                GeneratorKind::Local => {
                    let focus = MixedStrategy::pure(candidates.len(), best_i);
                    generate_pool_local(game, state, player, &candidates, &focus, d.pool_size, d.base_count, rng)?
                }
                GeneratorKind::Full => generate_pool_full(game, state, player)?,
            };
            let vals = pool_values(game, state, player, &pool, &model, values, rng)?;
            let Some((i, v)) = vals
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
            else {
                break;
            };
            if v - base > d.epsilon && !candidates.contains(&pool[i]) {
                candidates.push(pool[i].clone(), 0.0);
                added += 1;
            } else {
                break;
            }
        }
    }
    // payoffs of every candidate against every weighted victim joint action
    let profiles = opponent_profiles(player, &model, rng);
    let mut ev = StageEvaluator::new(game, state, values)?;
    let mut payoff = vec![Vec::with_capacity(profiles.len()); candidates.len()];
    let mut joint = Vec::with_capacity(n);
    for (a, row) in candidates.actions.iter().zip(payoff.iter_mut()) {
        for (_, prof) in &profiles {
            joint.clear();
            joint.extend(prof.iter().map(|x| x.clone().unwrap_or_else(|| a.clone())));
            row.push(ev.payoff(&joint)?);
        }
    }
    let weights: Vec<f64> = profiles.iter().map(|(w, _)| *w).collect();
    let policy = one_sided_rm(&payoff, &weights, player, cfg.rm_iterations, rng);
    let mut expected = vec![0.0; n];
    for (pi, row) in policy.iter().zip(&payoff) {
        for (w, v) in weights.iter().zip(row) {
            for q in 0..n {
                expected[q] += pi * w * v[q];
            }
        }
    }
    Ok(Reply {
        candidates,
        policy,
        values: expected,
        victim: model,
        added,
    })
}

/// Linear-averaged regret matching for one player against opponent joint
/// actions drawn by weight each iteration.
fn one_sided_rm<R: Rng + ?Sized>(
    payoff: &[Vec<Vec<f64>>],
    weights: &[f64],
    player: usize,
    iterations: usize,
    rng: &mut R,
) -> Vec<f64> {
    let k = payoff.len();
    let mut regret = vec![0.0; k];
    let mut avg = vec![0.0; k];
    let mut current = vec![1.0 / k as f64; k];
    for t in 1..=iterations {
        let j = crate::matrix::sample_index(weights, rng);
        let u: Vec<f64> = payoff.iter().map(|row| row[j][player]).collect();
        let ev: f64 = current.iter().zip(&u).map(|(p, x)| p * x).sum();
        for (r, x) in regret.iter_mut().zip(&u) {
            *r += x - ev;
        }
        for (a, p) in avg.iter_mut().zip(&current) {
            *a += t as f64 * p;
        }
        let pos: f64 = regret.iter().map(|r| r.max(0.0)).sum();
        for (c, r) in current.iter_mut().zip(&regret) {
            *c = if pos > 0.0 { r.max(0.0) / pos } else { 1.0 / k as f64 };
        }
    }
    let total: f64 = avg.iter().sum();
    avg.into_iter().map(|a| a / total).collect()
}

/// Trains an exploiter by self-play against the frozen victim, cycling the
/// exploiter through the seats episode by episode.
pub fn exploiter_train<G: Game, R: Rng>(
    game: &G,
    victim: Arc<dyn Policy<G>>,
    cfg: &ExploiterConfig,
    rng: &mut R,
) -> Result<ExploiterAgent<G>> {
    cfg.validate()?;
    let n = game.num_players();
    let mut values = ValueTable::for_game(game);
    let mut proposal = ProposalModel::new(DEFAULT_SMOOTHING);
    for episode in 0..cfg.episodes {
        let me = episode % n;
        let mut state = game.initial_state();
        let mut turn = 0;
        while !game.is_terminal(&state) && turn < game.max_turns() {
            let r = reply(game, &state, me, &*victim, &values, &proposal, cfg, rng)?;
            let visits = values.visits(&state) as f64;
            values.apply(&state, &r.values, cfg.alpha_c / (cfg.alpha_c + visits))?;
            proposal.update_toward(&state, me, &r.candidates.actions, &r.policy, 1.0)?;
            let mine = if rng.random_bool(cfg.schedule.epsilon(turn)) {
                rng.random_range(0..r.candidates.len())
            } else {
                crate::matrix::sample_index(&r.policy, rng)
            };
            let joint: Vec<G::Action> = (0..n)
                .map(|p| {
                    if p == me {
                        r.candidates.actions[mine].clone()
                    } else {
                        let m = &r.victim[p];
                        m.actions[sample_policy(m, rng)].clone()
                    }
                })
                .collect();
            state = game.next_state(&state, &joint)?;
            turn += 1;
        }
    }
    Ok(ExploiterAgent {
        label: format!("exploiter-of-{}", victim.label()),
        victim,
        values: Arc::new(values),
        proposal: Arc::new(proposal),
        cfg: cfg.clone(),
    })
}
