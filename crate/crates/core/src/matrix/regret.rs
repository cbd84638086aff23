use rand::Rng;
use serde::{Deserialize, Serialize};

use super::game::{advance, RestrictedStageGame};
use super::strategy::{sample_index, MixedStrategy};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default regret-matching iteration count per stage game.
pub const DEFAULT_RM_ITERATIONS: usize = 256;
/// Joint-action count up to which expectations are computed exactly.
pub const DEFAULT_EXACT_CAP: u128 = 1_000_000;
/// Monte Carlo samples used above the exact cap.
pub const DEFAULT_MC_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmConfig {
    /// Weigh iteration t by t (implemented by discounting the past by t/(t+1)).
    pub linear: bool,
    /// Count the most recent instantaneous regret twice when choosing the policy.
    pub optimism: bool,
}

impl Default for RmConfig {
    fn default() -> Self {
        Self {
            linear: true,
            optimism: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub iterations: usize,
    pub rm: RmConfig,
    pub exact_cap: u128,
    pub mc_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_RM_ITERATIONS,
            rm: RmConfig::default(),
            exact_cap: DEFAULT_EXACT_CAP,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

impl SolverConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }
}

/// Per-player regret-matching accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretState<S> {
    pub cum_regret: Vec<S>,
    pub cum_policy: Vec<S>,
    pub iteration: u64,
    pub last_instant_regret: Vec<S>,
}

impl<S: Scalar> RegretState<S> {
    pub fn new(num_actions: usize) -> Self {
        Self {
            cum_regret: vec![S::zero(); num_actions],
            cum_policy: vec![S::zero(); num_actions],
            iteration: 0,
            last_instant_regret: vec![S::zero(); num_actions],
        }
    }

    pub fn len(&self) -> usize {
        self.cum_regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum_regret.is_empty()
    }

    /// Regret used for choosing the current policy. Optimism adds one extra
    /// copy of the latest instantaneous regret; the accumulator is untouched.
    pub fn effective_regret(&self, optimism: bool) -> Vec<S> {
        if optimism {
            self.cum_regret
                .iter()
                .zip(&self.last_instant_regret)
                .map(|(c, l)| c.clone() + l.clone())
                .collect()
        } else {
            self.cum_regret.clone()
        }
    }

    pub fn current_policy(&self, optimism: bool) -> Result<MixedStrategy<S>> {
        regret_matching_policy(&self.effective_regret(optimism))
    }

    /// Normalized accumulated policy (uniform before any iteration).
    pub fn average_policy(&self) -> Result<MixedStrategy<S>> {
        MixedStrategy::from_weights(&self.cum_policy)
    }
}

/// Positive parts of `regrets` normalized, or uniform when none is positive.
pub fn regret_matching_policy<S: Scalar>(regrets: &[S]) -> Result<MixedStrategy<S>> {
    if regrets.is_empty() {
        return Err(Error::DegenerateGame("empty action set".into()));
    }
    MixedStrategy::from_weights(regrets)
}

/// One sampled regret-matching iteration with a sampled joint action.
pub fn sampled_rm_step<S: Scalar, R: Rng + ?Sized>(
    game: &RestrictedStageGame<S>,
    regrets: &mut [RegretState<S>],
    cfg: RmConfig,
    rng: &mut R,
) -> Result<()> {
    let policies = current_policies(game, regrets, cfg)?;
    let sample: Vec<usize> = policies
        .iter()
        .map(|p| sample_index(p.probs(), rng))
        .collect();
    rm_update(game, regrets, cfg, &policies, &sample)
}

/// The same iteration with the joint action `sample` forced.
pub fn rm_step_with_sample<S: Scalar>(
    game: &RestrictedStageGame<S>,
    regrets: &mut [RegretState<S>],
    cfg: RmConfig,
    sample: &[usize],
) -> Result<()> {
    let policies = current_policies(game, regrets, cfg)?;
    rm_update(game, regrets, cfg, &policies, sample)
}

fn current_policies<S: Scalar>(
    game: &RestrictedStageGame<S>,
    regrets: &[RegretState<S>],
    cfg: RmConfig,
) -> Result<Vec<MixedStrategy<S>>> {
    if regrets.len() != game.num_players() {
        return Err(Error::DegenerateGame(format!(
            "{} regret states for {} players",
            regrets.len(),
            game.num_players()
        )));
    }
    regrets
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != game.num_actions(i) {
                return Err(Error::DegenerateGame(format!(
                    "player {i}: {} regrets for {} actions",
                    r.len(),
                    game.num_actions(i)
                )));
            }
            r.current_policy(cfg.optimism)
        })
        .collect()
}

fn rm_update<S: Scalar>(
    game: &RestrictedStageGame<S>,
    regrets: &mut [RegretState<S>],
    cfg: RmConfig,
    policies: &[MixedStrategy<S>],
    sample: &[usize],
) -> Result<()> {
    let mut joint = sample.to_vec();
    for (i, state) in regrets.iter_mut().enumerate() {
        let n = game.num_actions(i);
        let mut values = Vec::with_capacity(n);
        for a in 0..n {
            joint[i] = a;
            let v = game.payoff(&joint, i)?;
            if !v.is_finite_value() {
                return Err(Error::PayoffEvaluation(format!("non-finite payoff {v:?}")));
            }
            values.push(v);
        }
        joint[i] = sample[i];
        let baseline = values
            .iter()
            .zip(policies[i].probs())
            .fold(S::zero(), |acc, (v, p)| acc + v.clone() * p.clone());
        let discount = if cfg.linear {
            let t = S::from_u64(state.iteration).expect("iteration fits scalar");
            Some(t.clone() / (t + S::one()))
        } else {
            None
        };
        for a in 0..n {
            let instant = values[a].clone() - baseline.clone();
            if let Some(d) = &discount {
                state.cum_regret[a] = state.cum_regret[a].clone() * d.clone();
                state.cum_policy[a] = state.cum_policy[a].clone() * d.clone();
            }
            state.cum_regret[a] = state.cum_regret[a].clone() + instant.clone();
            state.cum_policy[a] = state.cum_policy[a].clone() + policies[i].prob(a).clone();
            state.last_instant_regret[a] = instant;
        }
        state.iteration += 1;
    }
    Ok(())
}

/// Approximate equilibrium of a restricted game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult<S> {
    pub strategies: Vec<MixedStrategy<S>>,
    pub values: Vec<S>,
    pub iterations_run: usize,
    /// Monte Carlo sample count when `values` is an estimate.
    pub value_samples: Option<usize>,
}

/// Runs `cfg.iterations` sampled RM steps and returns the average policy.
pub fn solve_restricted<S: Scalar, R: Rng + ?Sized>(
    game: &RestrictedStageGame<S>,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<EquilibriumResult<S>> {
    let iters = cfg.iterations.max(1);
    let mut regrets: Vec<RegretState<S>> = game
        .action_counts()
        .iter()
        .map(|&n| RegretState::new(n))
        .collect();
    if game.action_counts().iter().all(|&n| n == 1) {
        let values = game.payoffs(&vec![0; game.num_players()])?;
        return Ok(EquilibriumResult {
            strategies: vec![MixedStrategy::pure(1, 0); game.num_players()],
            values,
            iterations_run: 0,
            value_samples: None,
        });
    }
    for _ in 0..iters {
        sampled_rm_step(game, &mut regrets, cfg.rm, rng)?;
    }
    let strategies = regrets
        .iter()
        .map(RegretState::average_policy)
        .collect::<Result<Vec<_>>>()?;
    let (values, value_samples) =
        expected_payoffs(game, &strategies, cfg.exact_cap, cfg.mc_samples, rng)?;
    Ok(EquilibriumResult {
        strategies,
        values,
        iterations_run: iters,
        value_samples,
    })
}

/// Expected payoff vector under the product of `strategies`.
///
/// Exact (support-pruned enumeration) when the joint count is at most
/// `exact_cap`, else a Monte Carlo estimate whose sample count is returned.
pub fn expected_payoffs<S: Scalar, R: Rng + ?Sized>(
    game: &RestrictedStageGame<S>,
    strategies: &[MixedStrategy<S>],
    exact_cap: u128,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<S>, Option<usize>)> {
    let supports: Vec<Vec<usize>> = strategies
        .iter()
        .map(|s| (0..s.len()).filter(|&a| *s.prob(a) > S::zero()).collect())
        .collect();
    let support_joint = supports
        .iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    let n = game.num_players();
    if support_joint <= exact_cap {
        let counts: Vec<usize> = supports.iter().map(Vec::len).collect();
        let mut pos = vec![0usize; n];
        let mut joint = vec![0usize; n];
        let mut total = vec![S::zero(); n];
        for _ in 0..support_joint {
            let mut w = S::one();
            for p in 0..n {
                joint[p] = supports[p][pos[p]];
                w = w * strategies[p].prob(joint[p]).clone();
            }
            let v = game.payoffs(&joint)?;
            for p in 0..n {
                total[p] = total[p].clone() + w.clone() * v[p].clone();
            }
            advance(&mut pos, &counts);
        }
        Ok((total, None))
    } else {
        let samples = samples.max(1);
        let mut total = vec![S::zero(); n];
        let mut joint = vec![0usize; n];
        for _ in 0..samples {
            for p in 0..n {
                joint[p] = strategies[p].sample(rng);
            }
            let v = game.payoffs(&joint)?;
            for p in 0..n {
                total[p] = total[p].clone() + v[p].clone();
            }
        }
        let k = S::from_usize(samples).expect("sample count fits scalar");
        Ok((
            total.into_iter().map(|t| t / k.clone()).collect(),
            Some(samples),
        ))
    }
}
