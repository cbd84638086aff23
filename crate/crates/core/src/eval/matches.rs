use std::fmt::Write as _;

use serde_json::{json, Value};

use super::policy::{sample_policy, Policy};
use crate::error::{Error, Result};
use crate::rng::{derive, derived_rng, MATCH_GAME, TURN};
use crate::stogame::Game;

#[derive(Clone, Debug)]
pub struct MatchConfig {
    pub games: usize,
    pub seed: u64,
    /// Rotate agents through the seats game by game.
    pub rotate_seats: bool,
    pub threads: usize,
}

impl MatchConfig {
    pub fn new(games: usize, seed: u64) -> Self {
        Self {
            games,
            seed,
            rotate_seats: true,
            threads: 1,
        }
    }
}

/// One decision as seen by the acting agent: its mixture, the value-model
/// Q of each own candidate against the observed opponent actions, and the
/// candidate actually played.
#[derive(Clone, Debug, PartialEq)]
pub struct TurnRecord<A> {
    pub turn: usize,
    pub sigma: Vec<f64>,
    pub q: Vec<f64>,
    pub realized: usize,
    /// Joint action observed that turn.
    pub joint: Vec<A>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRecord<A> {
    pub turn: usize,
    pub delta: f64,
    pub sigma: Vec<f64>,
    pub joint: Vec<A>,
}

/// `R − Σ_t δ_t` with `δ_t = Q(a_t) − Σ_a σ_t(a)·Q(a)`.
pub fn variance_reduced_score<A: Clone>(turns: &[TurnRecord<A>], raw: f64) -> Result<(f64, Vec<DeltaRecord<A>>)> {
    let mut out = Vec::with_capacity(turns.len());
    let mut adjusted = raw;
    for t in turns {
        if t.sigma.len() != t.q.len() || t.realized >= t.q.len() {
            return Err(Error::InvalidDistribution(format!(
                "turn {}: {} probabilities, {} Q-values, realized index {}",
                t.turn,
                t.sigma.len(),
                t.q.len(),
                t.realized
            )));
        }
        let expected: f64 = t.sigma.iter().zip(&t.q).map(|(p, q)| p * q).sum();
        let delta = t.q[t.realized] - expected;
        if !delta.is_finite() {
            return Err(Error::NonFinite(format!("delta at turn {}", t.turn)));
        }
        adjusted -= delta;
        out.push(DeltaRecord {
            turn: t.turn,
            delta,
            sigma: t.sigma.clone(),
            joint: t.joint.clone(),
        });
    }
    Ok((adjusted, out))
}

#[derive(Clone, Debug)]
pub struct GameRecord<A> {
    pub index: usize,
    pub seed: u64,
    /// Agent index sitting in each seat.
    pub seats: Vec<usize>,
    /// Per agent.
    pub raw: Vec<f64>,
    pub adjusted: Vec<f64>,
    pub deltas: Vec<Vec<DeltaRecord<A>>>,
    pub turns: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample variance; `None` with fewer than two samples.
    pub variance: Option<f64>,
    /// Standard error of the mean; `None` with fewer than two samples.
    pub se: Option<f64>,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / n };
        let variance = (xs.len() >= 2).then(|| xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0));
        Stat {
            mean,
            variance,
            se: variance.map(|v| (v / n).sqrt()),
        }
    }

    fn json(&self) -> Value {
        json!({ "mean": self.mean, "variance": self.variance, "se": self.se })
    }
}

#[derive(Clone, Debug)]
pub struct AgentSummary {
    pub label: String,
    pub raw: Stat,
    pub adjusted: Stat,
    /// Paired raw − adjusted differences.
    pub difference: Stat,
}

#[derive(Clone, Debug)]
pub struct MatchReport<A> {
    pub games: Vec<GameRecord<A>>,
    pub agents: Vec<AgentSummary>,
}

impl<A> MatchReport<A> {
    fn summarize(labels: Vec<String>, games: Vec<GameRecord<A>>) -> Self {
        let agents = labels
            .into_iter()
            .enumerate()
            .map(|(k, label)| {
                let raw: Vec<f64> = games.iter().map(|g| g.raw[k]).collect();
                let adj: Vec<f64> = games.iter().map(|g| g.adjusted[k]).collect();
                let diff: Vec<f64> = raw.iter().zip(&adj).map(|(r, a)| r - a).collect();
                AgentSummary {
                    label,
                    raw: Stat::of(&raw),
                    adjusted: Stat::of(&adj),
                    difference: Stat::of(&diff),
                }
            })
            .collect();
        Self { games, agents }
    }

    /// True when standard errors are undefined (a single game).
    pub fn se_undefined(&self) -> bool {
        self.agents.iter().any(|a| a.raw.se.is_none())
    }

    /// One row per game: index, seed, seating, raw and adjusted scores per agent.
    pub fn to_csv(&self) -> String {
        let k = self.agents.len();
        let mut s = String::from("game,seed,seats");
        for i in 0..k {
            write!(s, ",raw_{i}").unwrap();
        }
        for i in 0..k {
            write!(s, ",adjusted_{i}").unwrap();
        }
        s.push('\n');
        for g in &self.games {
            let seats: Vec<String> = g.seats.iter().map(|x| x.to_string()).collect();
            write!(s, "{},{},{}", g.index, g.seed, seats.join("|")).unwrap();
            for v in g.raw.iter().chain(&g.adjusted) {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "games": self.games.len(),
            "se_undefined": self.se_undefined(),
            "agents": self.agents.iter().map(|a| json!({
                "label": a.label,
                "raw": a.raw.json(),
                "adjusted": a.adjusted.json(),
                "difference": a.difference.json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Plays `cfg.games` games, agent `k` starting in seat `k` and shifting one
/// seat per game when rotation is on. Every agent computes its own
/// mixture at every state and samples its action from it.
pub fn play_match<G: Game>(
    game: &G,
    agents: &[&dyn Policy<G>],
    cfg: &MatchConfig,
) -> Result<MatchReport<G::Action>> {
    let n = game.num_players();
    if agents.len() != n {
        return Err(Error::Config(format!("{} agents for a {n}-player game", agents.len())));
    }
    if cfg.games == 0 {
        return Err(Error::Config("a match needs at least one game".into()));
    }
    let run = |g: usize| {
        let seed = derive(cfg.seed, MATCH_GAME, g as u64);
        let shift = if cfg.rotate_seats { g % n } else { 0 };
        let seats: Vec<usize> = (0..n).map(|s| (s + n - shift) % n).collect();
        play_game(game, agents, seats, g, seed)
    };
    let threads = cfg.threads.clamp(1, cfg.games);
    let mut games: Vec<GameRecord<G::Action>> = if threads == 1 {
        (0..cfg.games).map(run).collect::<Result<_>>()?
    } else {
        let chunks: Vec<Result<Vec<GameRecord<G::Action>>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let run = &run;
                    scope.spawn(move || (t..cfg.games).step_by(threads).map(run).collect::<Result<Vec<_>>>())
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Worker("match thread panicked".into()))))
                .collect()
        });
        let mut all = Vec::with_capacity(cfg.games);
        for c in chunks {
            all.extend(c?);
        }
        all
    };
    games.sort_by_key(|g| g.index);
    let labels = agents.iter().map(|a| a.label().to_string()).collect();
    Ok(MatchReport::summarize(labels, games))
}

fn play_game<G: Game>(
    game: &G,
    agents: &[&dyn Policy<G>],
    seats: Vec<usize>,
    index: usize,
    seed: u64,
) -> Result<GameRecord<G::Action>> {
    let n = game.num_players();
    let gamma = game.discount();
    let mut state = game.initial_state();
    let mut returns = vec![0.0; n];
    let mut scale = 1.0;
    let mut records: Vec<Vec<TurnRecord<G::Action>>> = vec![Vec::new(); n];
    let mut turn = 0;
    while !game.is_terminal(&state) && turn < game.max_turns() {
        let mut mixtures = Vec::with_capacity(n);
        let mut chosen = Vec::with_capacity(n);
        for (seat, &k) in seats.iter().enumerate() {
            let mut rng = derived_rng(seed, TURN, (turn * n + seat) as u64);
            let pt = agents[k].policy(game, &state, seat, &mut rng)?;
            if pt.actions.is_empty() || pt.actions.len() != pt.probs.len() {
                return Err(Error::InvalidDistribution(format!(
                    "agent '{}' returned a malformed mixture",
                    agents[k].label()
                )));
            }
            chosen.push(sample_policy(&pt, &mut rng));
            mixtures.push(pt);
        }
        let joint: Vec<G::Action> = mixtures.iter().zip(&chosen).map(|(m, &i)| m.actions[i].clone()).collect();
        for (seat, &k) in seats.iter().enumerate() {
            let Some(values) = agents[k].value_model() else { continue };
            let mut alt = joint.clone();
            let q = mixtures[seat]
                .actions
                .iter()
                .map(|a| {
                    alt[seat] = a.clone();
                    let next = game.next_state(&state, &alt)?;
                    Ok(game.reward(&next)[seat] + gamma * values.continuation(game, &next)[seat])
                })
                .collect::<Result<Vec<f64>>>()?;
            records[k].push(TurnRecord {
                turn,
                sigma: mixtures[seat].probs.clone(),
                q,
                realized: chosen[seat],
                joint: joint.clone(),
            });
        }
        let (next, r) = game.transition(&state, &joint)?;
        for (acc, r) in returns.iter_mut().zip(&r) {
            *acc += scale * r;
        }
        scale *= gamma;
        state = next;
        turn += 1;
    }
    let mut raw = vec![0.0; n];
    let mut adjusted = vec![0.0; n];
    let mut deltas = vec![Vec::new(); n];
    for (seat, &k) in seats.iter().enumerate() {
        raw[k] = returns[seat];
        let (adj, d) = variance_reduced_score(&records[k], returns[seat])?;
        adjusted[k] = adj;
        deltas[k] = d;
    }
    Ok(GameRecord {
        index,
        seed,
        seats,
        raw,
        adjusted,
        deltas,
        turns: turn,
    })
}

/// Head-to-head of an exploiter against copies of its victim; the
/// exploiter's statistics are agent 0 of the report.
pub fn measure_exploitability<G: Game>(
    game: &G,
    victim: &dyn Policy<G>,
    exploiter: &dyn Policy<G>,
    cfg: &MatchConfig,
) -> Result<MatchReport<G::Action>> {
    let mut agents: Vec<&dyn Policy<G>> = vec![exploiter];
    agents.extend(std::iter::repeat_n(victim, game.num_players() - 1));
    play_match(game, &agents, cfg)
}
