//! Agent evaluation: matches with luck-adjusted scores, rollout values,
//! exhaustive best responses and a one-sided exploiter.

mod exact;
mod exploiter;
mod matches;
mod policy;
mod rollout;

pub use exact::{exploitability, ExactEvaluator, ExactOptions, ExploitabilityReport};
pub use exploiter::{exploiter_train, victim_model, ExploiterAgent, ExploiterConfig, Reply};
pub use matches::{
    measure_exploitability, play_match, variance_reduced_score, AgentSummary, DeltaRecord, GameRecord,
    MatchConfig, MatchReport, Stat, TurnRecord,
};
pub use policy::{
    average_policies, sample_policy, AgentHandle, FirstActionPolicy, MinimaxPolicy, Policy, SearchParams,
    TablePolicy, UniformPolicy,
};
pub use rollout::{rollout_value, RolloutConfig};
