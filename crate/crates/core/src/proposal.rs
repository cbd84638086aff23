//! Tabular action-proposal model with tempered nucleus sampling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MixedStrategy;
use crate::stogame::Game;

pub const DEFAULT_NUM_SAMPLES: usize = 250;
pub const DEFAULT_NUM_CANDIDATES: usize = 50;
pub const DEFAULT_TEMPERATURE: f64 = 0.75;
pub const DEFAULT_TOP_P: f64 = 0.95;
pub const DEFAULT_SMOOTHING: f64 = 1e-3;

/// Distinct actions of one player with their proposal likelihoods.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet<A> {
    pub actions: Vec<A>,
    pub likelihoods: Vec<f64>,
}

impl<A: Clone + Eq + Hash> CandidateSet<A> {
    /// Candidates with equal likelihoods; duplicates are dropped.
    pub fn from_actions(actions: Vec<A>) -> Result<Self> {
        let mut seen = HashSet::new();
        let actions: Vec<A> = actions.into_iter().filter(|a| seen.insert(a.clone())).collect();
        if actions.is_empty() {
            return Err(Error::DegenerateGame("empty candidate set".into()));
        }
        let p = 1.0 / actions.len() as f64;
        Ok(Self {
            likelihoods: vec![p; actions.len()],
            actions,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn contains(&self, a: &A) -> bool {
        self.actions.contains(a)
    }

    pub fn position(&self, a: &A) -> Option<usize> {
        self.actions.iter().position(|x| x == a)
    }

    /// Appends `a` when absent; returns its index.
    pub fn push(&mut self, a: A, likelihood: f64) -> usize {
        match self.position(&a) {
            Some(i) => i,
            None => {
                self.actions.push(a);
                self.likelihoods.push(likelihood);
                self.actions.len() - 1
            }
        }
    }
}

/// Accumulated weights of one (state, player) entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionWeights<A: Ord> {
    pub weights: BTreeMap<A, f64>,
    pub total: f64,
}

/// Per-state frequency model. Seen actions carry accumulated weight; every
/// other legal action carries the `smoothing` pseudo-count. States never
/// updated fall back to the uniform distribution over legal actions.
#[derive(Clone, Debug)]
pub struct ProposalModel<S, A: Ord> {
    table: HashMap<(S, usize), ActionWeights<A>>,
    pub smoothing: f64,
}

impl<S: Eq + Hash, A: Ord> PartialEq for ProposalModel<S, A> {
    fn eq(&self, other: &Self) -> bool {
        self.smoothing == other.smoothing && self.table == other.table
    }
}

/// Tempered distribution: explicit actions plus a block of equally likely
/// unlisted actions.
struct Tempered<A> {
    listed: Vec<(A, f64)>,
    rest_count: f64,
    rest_weight: f64,
}

impl<S: Clone + Eq + Hash, A: Clone + Ord + Hash> ProposalModel<S, A> {
    pub fn new(smoothing: f64) -> Self {
        Self {
            table: HashMap::new(),
            smoothing: smoothing.max(0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entry(&self, state: &S, player: usize) -> Option<&ActionWeights<A>> {
        self.table.get(&(state.clone(), player))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(S, usize), &ActionWeights<A>)> {
        self.table.iter()
    }

    pub fn insert_entry(&mut self, state: S, player: usize, w: ActionWeights<A>) {
        self.table.insert((state, player), w);
    }

    /// Untempered model probability of `action`.
    pub fn likelihood<G>(&self, game: &G, state: &S, player: usize, action: &A) -> Result<f64>
    where
        G: Game<State = S, Action = A>,
    {
        let count = game.action_count(state, player)? as f64;
        Ok(match self.entry(state, player) {
            None => 1.0 / count,
            Some(e) => {
                let seen = e.weights.len() as f64;
                let z = e.total + self.smoothing * (count - seen).max(0.0);
                if z <= 0.0 {
                    1.0 / count
                } else {
                    e.weights.get(action).copied().unwrap_or(self.smoothing) / z
                }
            }
        })
    }

    /// Normalized weights over the actions seen at (state, player).
    pub fn normalized(&self, state: &S, player: usize) -> Option<Vec<(A, f64)>> {
        let e = self.entry(state, player)?;
        if e.total <= 0.0 {
            return None;
        }
        Some(e.weights.iter().map(|(a, w)| (a.clone(), w / e.total)).collect())
    }

    fn tempered<G>(&self, game: &G, state: &S, player: usize, temperature: f64) -> Result<Tempered<A>>
    where
        G: Game<State = S, Action = A>,
    {
        let count = game.action_count(state, player)? as f64;
        let (listed, rest_each) = match self.entry(state, player) {
            Some(e) if e.total > 0.0 => {
                let listed: Vec<(A, f64)> = e
                    .weights
                    .iter()
                    .map(|(a, w)| (a.clone(), *w))
                    .filter(|(_, w)| *w > 0.0)
                    .collect();
                (listed, self.smoothing)
            }
            _ => (Vec::new(), 1.0),
        };
        let rest_count = (count - listed.len() as f64).max(0.0);
        let rest_each = if rest_count > 0.0 { rest_each } else { 0.0 };
        let top = listed.iter().map(|x| x.1).fold(rest_each, f64::max);
        let temper = |w: f64| {
            if w <= 0.0 {
                0.0
            } else {
                ((w.ln() - top.ln()) / temperature).exp()
            }
        };
        Ok(Tempered {
            listed: listed.into_iter().map(|(a, w)| (a, temper(w))).collect(),
            rest_count,
            rest_weight: temper(rest_each),
        })
    }

    /// Samples after raising probabilities to `1/temperature` and keeping
    /// the smallest most-likely prefix with mass at least `top_p`. Equally
    /// likely actions are never split by the truncation.
    pub fn sample_action<G, R>(
        &self,
        game: &G,
        state: &S,
        player: usize,
        temperature: f64,
        top_p: f64,
        rng: &mut R,
    ) -> Result<A>
    where
        G: Game<State = S, Action = A>,
        R: Rng + ?Sized,
    {
        if !(temperature > 0.0) || !(top_p > 0.0 && top_p <= 1.0) {
            return Err(Error::Config(format!(
                "temperature {temperature} must be > 0 and top_p {top_p} in (0, 1]"
            )));
        }
        let t = self.tempered(game, state, player, temperature)?;
        // groups of equal weight in descending order; `None` is the rest block
        let mut groups: Vec<(f64, Vec<Option<usize>>)> = Vec::new();
        let mut order: Vec<(f64, Option<usize>)> =
            t.listed.iter().enumerate().map(|(i, (_, w))| (*w, Some(i))).collect();
        if t.rest_count > 0.0 && t.rest_weight > 0.0 {
            order.push((t.rest_weight, None));
        }
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (w, item) in order {
            match groups.last_mut() {
                Some((gw, members)) if (*gw - w).abs() <= 1e-12 * gw.max(w) => members.push(item),
                _ => groups.push((w, vec![item])),
            }
        }
        let mass = |item: &Option<usize>| match item {
            Some(i) => t.listed[*i].1,
            None => t.rest_weight * t.rest_count,
        };
        let total: f64 = groups.iter().flat_map(|g| &g.1).map(mass).sum();
        if total <= 0.0 {
            return game.sample_action(state, player, rng);
        }
        let mut kept = Vec::new();
        let mut acc = 0.0;
        for (_, members) in groups {
            acc += members.iter().map(mass).sum::<f64>();
            kept.extend(members);
            if acc >= top_p * total * (1.0 - 1e-12) {
                break;
            }
        }
        let mut u = rng.random::<f64>() * acc;
        let mut pick = *kept.last().unwrap();
        for item in &kept {
            let m = mass(item);
            if u < m {
                pick = *item;
                break;
            }
            u -= m;
        }
        match pick {
            Some(i) => Ok(t.listed[i].0.clone()),
            None => {
                // uniform over actions outside the table
                let seen: HashSet<&A> = t.listed.iter().map(|(a, _)| a).collect();
                for _ in 0..10_000 {
                    let a = game.sample_action(state, player, rng)?;
                    if !seen.contains(&a) {
                        return Ok(a);
                    }
                }
                game.sample_action(state, player, rng)
            }
        }
    }

    /// Draws `num_samples` actions, deduplicates, and keeps the `num_candidates`
    /// most likely (ties broken by canonical action order). `per_unit_cap`
    /// further limits the set to `cap * units` actions.
    #[allow(clippy::too_many_arguments)]
    pub fn candidates<G, R>(
        &self,
        game: &G,
        state: &S,
        player: usize,
        num_samples: usize,
        num_candidates: usize,
        per_unit_cap: Option<usize>,
        rng: &mut R,
    ) -> Result<CandidateSet<A>>
    where
        G: Game<State = S, Action = A>,
        R: Rng + ?Sized,
    {
        let mut seen = HashSet::new();
        let mut pool = Vec::new();
        for _ in 0..num_samples.max(1) {
            let a = self.sample_action(game, state, player, 1.0, 1.0, rng)?;
            if seen.insert(a.clone()) {
                pool.push(a);
            }
        }
        let mut ranked: Vec<(A, f64)> = pool
            .into_iter()
            .map(|a| {
                let l = self.likelihood(game, state, player, &a)?;
                Ok((a, l))
            })
            .collect::<Result<_>>()?;
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        let mut keep = num_candidates.max(1);
        if let Some(cap) = per_unit_cap {
            keep = keep.min((cap * game.units(state, player).max(1)).max(1));
        }
        ranked.truncate(keep);
        let (actions, likelihoods) = ranked.into_iter().unzip();
        Ok(CandidateSet { actions, likelihoods })
    }

    /// Adds `weight * sigma(a)` to every candidate action's weight.
    pub fn update_toward(
        &mut self,
        state: &S,
        player: usize,
        actions: &[A],
        sigma: &[f64],
        weight: f64,
    ) -> Result<()> {
        if actions.len() != sigma.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for {} actions",
                sigma.len(),
                actions.len()
            )));
        }
        MixedStrategy::new(sigma.to_vec())?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Config(format!("update weight {weight} must be positive")));
        }
        let e = self.table.entry((state.clone(), player)).or_default();
        for (a, p) in actions.iter().zip(sigma) {
            if *p > 0.0 {
                *e.weights.entry(a.clone()).or_insert(0.0) += weight * p;
            }
        }
        e.total += weight;
        Ok(())
    }
}

impl<A: Ord> Default for ActionWeights<A> {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            total: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::microdip::{MicroDip, Order, OrderKind, PlayerAction};
    use crate::stogame::TabularGame;

    fn four() -> TabularGame {
        TabularGame::matrix_game("four", &[vec![0.0; 4], vec![0.0; 4]])
    }

    fn model_with(game: &TabularGame, weights: &[f64]) -> ProposalModel<usize, usize> {
        let mut m = ProposalModel::new(0.0);
        let s = game.initial_state();
        let sum: f64 = weights.iter().sum();
        let sigma: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let actions: Vec<usize> = (0..weights.len()).collect();
        m.update_toward(&s, 1, &actions, &sigma, sum).unwrap();
        m
    }

    fn freq(m: &ProposalModel<usize, usize>, g: &TabularGame, t: f64, p: f64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = vec![0.0; 4];
        for _ in 0..n {
            c[m.sample_action(g, &0, 1, t, p, &mut rng).unwrap()] += 1.0 / n as f64;
        }
        c
    }

    #[test]
    fn sampling_examples() {
        let g = four();
        let m = model_with(&g, &[1.0, 1.0]);
        let f = freq(&m, &g, 1.0, 1.0, 20_000);
        assert!((f[0] - 0.5).abs() < 0.02 && f[2] == 0.0 && f[3] == 0.0);
        let m = model_with(&g, &[9.0, 1.0]);
        assert!(freq(&m, &g, 1.0, 0.5, 1000)[0] > 1.0 - 1e-9);
        let m = model_with(&g, &[2.0, 1.0]);
        assert!(freq(&m, &g, 0.01, 1.0, 10_000)[0] >= 0.99);
        assert!(m.sample_action(&g, &0, 1, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn unseen_state_is_uniform() {
        let g = four();
        let m = ProposalModel::<usize, usize>::new(0.0);
        let f = freq(&m, &g, 0.75, 0.95, 40_000);
        for x in f {
            assert!((x - 0.25).abs() < 0.02);
        }
        assert_eq!(m.likelihood(&g, &0, 1, &3).unwrap(), 0.25);
    }

    #[test]
    fn smoothing_keeps_unseen_actions() {
        let g = four();
        let mut m = model_with(&g, &[1.0]);
        m.smoothing = 1.0 / 3.0;
        // weight 1 on action 0 plus 1/3 on each of the other three
        assert!((m.likelihood(&g, &0, 1, &0).unwrap() - 0.5).abs() < 1e-12);
        let f = freq(&m, &g, 1.0, 1.0, 40_000);
        assert!((f[0] - 0.5).abs() < 0.02 && (f[3] - 1.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn candidate_examples() {
        let g = four();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = model_with(&g, &[1.0]);
        let c = m.candidates(&g, &0, 1, 100, 50, None, &mut rng).unwrap();
        assert_eq!(c.actions, vec![0]);
        let uniform = ProposalModel::<usize, usize>::new(0.0);
        let c = uniform.candidates(&g, &0, 1, 1000, 4, None, &mut rng).unwrap();
        assert_eq!(c.actions, vec![0, 1, 2, 3]);
        let m = model_with(&g, &[0.2, 0.5, 0.3]);
        let c = m.candidates(&g, &0, 1, 1000, 2, None, &mut rng).unwrap();
        assert_eq!(c.actions, vec![1, 2]);
        let c = m.candidates(&g, &0, 1, 1000, 3, Some(1), &mut rng).unwrap();
        assert_eq!(c.actions, vec![1]);
    }

    #[test]
    fn update_examples() {
        let g = four();
        let mut m = ProposalModel::<usize, usize>::new(0.0);
        m.update_toward(&0, 0, &[0, 1], &[0.8, 0.2], 1.0).unwrap();
        assert_eq!(m.normalized(&0, 0).unwrap(), vec![(0, 0.8), (1, 0.2)]);
        let mut m = ProposalModel::<usize, usize>::new(0.0);
        m.update_toward(&0, 0, &[0, 1], &[1.0, 0.0], 1.0).unwrap();
        m.update_toward(&0, 0, &[0, 1], &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(m.normalized(&0, 0).unwrap(), vec![(0, 0.5), (1, 0.5)]);
        for _ in 0..10 {
            m.update_toward(&0, 1, &[2, 3], &[0.25, 0.75], 1.0).unwrap();
        }
        let n = m.normalized(&0, 1).unwrap();
        assert!((n[0].1 - 0.25).abs() < 1e-12 && (n[1].1 - 0.75).abs() < 1e-12);
        assert!(m.update_toward(&0, 0, &[0, 1], &[0.7, 0.7], 1.0).is_err());
        assert!(m.update_toward(&0, 0, &[0, 1], &[0.5, 0.5], 0.0).is_err());
        let _ = g;
    }

    #[test]
    fn candidates_are_legal_and_miss_coordinated_pairs() {
        let game = MicroDip::arena16(4);
        let s = game.initial_state();
        let m = ProposalModel::new(DEFAULT_SMOOTHING);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // a1 -> b2 supported by a2 with b1 holding: one specific coordinated action
        let target = PlayerAction(vec![
            Order { unit: 0, kind: OrderKind::Move(5) },
            Order { unit: 1, kind: OrderKind::SupportMove(0, 5) },
            Order { unit: 4, kind: OrderKind::Hold },
        ]);
        game.validate_action(&s, 0, &target).unwrap();
        let mut hits = 0;
        for _ in 0..100 {
            let c = m.candidates(&game, &s, 0, 250, 50, None, &mut rng).unwrap();
            for a in &c.actions {
                game.validate_action(&s, 0, a).unwrap();
            }
            hits += c.contains(&target) as usize;
        }
        assert_eq!(hits, 0);
    }
}
