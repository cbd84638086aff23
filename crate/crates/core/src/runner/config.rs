use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dnvi::{ExploreSchedule, SelfPlayConfig, StageSolver};
use crate::error::{Error, Result};
use crate::explore::DoConfig;
use crate::matrix::SolverConfig;
use crate::proposal::{DEFAULT_NUM_CANDIDATES, DEFAULT_NUM_SAMPLES, DEFAULT_SMOOTHING};

pub const DEFAULT_BUFFER_CAPACITY: usize = 100_000;
pub const DEFAULT_BATCH_SIZE: usize = 256;

/// Whether self-play workers see the trained proposal model or keep the one
/// they started with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalMode {
    #[default]
    Normal,
    /// Workers keep the post-pretraining proposal; the trainer still
    /// updates and checkpoints its own copy.
    Npu,
}

impl std::str::FromStr for ProposalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "npu" => Ok(Self::Npu),
            other => Err(Error::Unknown {
                kind: "proposal mode",
                name: other.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub game: String,
    /// Game-specific parameters, see [`super::build_game`].
    pub game_params: Value,
    pub seed: u64,
    pub workers: usize,
    /// Self-play episodes after pretraining.
    pub episodes: usize,
    pub pretrain_episodes: usize,
    pub solver: SolverConfig,
    /// Proposal draws per state and player (N_b).
    pub num_samples: usize,
    /// Candidates kept per state and player (N_c).
    pub num_candidates: usize,
    pub per_unit_cap: Option<usize>,
    pub explore: ExploreSchedule,
    pub double_oracle: Option<DoConfig>,
    /// Floor of the value learning rate.
    pub alpha: f64,
    /// Early-visit learning rate c / (c + visits), used while above `alpha`.
    pub alpha_c: f64,
    pub smoothing: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Targets consumed per target produced, at most.
    pub max_train_ratio: f64,
    /// Episodes between snapshot publications.
    pub publish_interval: usize,
    /// Episodes per metrics row.
    pub metrics_interval: usize,
    /// Episodes between periodic checkpoints.
    pub checkpoint_interval: usize,
    pub proposal_mode: ProposalMode,
    /// Exact best-response exploitability of the live tables in every
    /// metrics row; only tractable on tiny games.
    pub exploitability_probe: bool,
    /// Write every double-oracle check to `do_trace.jsonl`.
    pub do_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            game: "duel9".into(),
            game_params: Value::Object(Default::default()),
            seed: 0,
            workers: 1,
            episodes: 200,
            pretrain_episodes: 20,
            solver: SolverConfig::default(),
            num_samples: DEFAULT_NUM_SAMPLES,
            num_candidates: DEFAULT_NUM_CANDIDATES,
            per_unit_cap: None,
            explore: ExploreSchedule::for_players(2),
            double_oracle: None,
            alpha: 0.05,
            alpha_c: 4.0,
            smoothing: DEFAULT_SMOOTHING,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            batch_size: DEFAULT_BATCH_SIZE,
            max_train_ratio: 6.0,
            publish_interval: 4,
            metrics_interval: 10,
            checkpoint_interval: 100,
            proposal_mode: ProposalMode::Normal,
            exploitability_probe: false,
            do_trace: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("workers", self.workers),
            ("episodes", self.episodes),
            ("solver.iterations", self.solver.iterations),
            ("solver.mc_samples", self.solver.mc_samples),
            ("num_samples", self.num_samples),
            ("num_candidates", self.num_candidates),
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("publish_interval", self.publish_interval),
            ("metrics_interval", self.metrics_interval),
            ("checkpoint_interval", self.checkpoint_interval),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be >= 1")));
        }
        if self.per_unit_cap == Some(0) {
            return Err(Error::Config("per_unit_cap must be >= 1".into()));
        }
        if !(self.max_train_ratio > 0.0) || !self.max_train_ratio.is_finite() {
            return Err(Error::Config(format!("max_train_ratio {} must be > 0", self.max_train_ratio)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.alpha_c >= 0.0) || !(self.smoothing >= 0.0) {
            return Err(Error::Config("alpha_c and smoothing must be >= 0".into()));
        }
        ExploreSchedule::new(self.explore.base, self.explore.first_turns.clone())?;
        if let Some(d) = &self.double_oracle {
            d.validate()?;
        }
        Ok(())
    }

    /// Learning rate for a state already updated `visits` times.
    pub fn learning_rate(&self, visits: u64) -> f64 {
        let early = self.alpha_c / (self.alpha_c + visits as f64);
        early.max(self.alpha).min(1.0)
    }

    pub fn selfplay(&self) -> SelfPlayConfig {
        SelfPlayConfig {
            num_samples: self.num_samples,
            num_candidates: self.num_candidates,
            per_unit_cap: self.per_unit_cap,
            solver: StageSolver::RegretMatching(self.solver.clone()),
            schedule: self.explore.clone(),
            double_oracle: self.double_oracle.clone(),
        }
    }
}
