//! Tabular Nash value iteration: stage games over candidate actions,
//! equilibrium value backups, self-play and pretraining episodes.

mod convergence;
mod selfplay;
mod stage;
mod values;

pub use convergence::{tabular_convergence_run, ConvergenceConfig, ConvergenceMode};
pub use selfplay::{
    pretrain_episode, selfplay_episode, solve_candidates, solve_state, Episode, ExploreSchedule, SelfPlayConfig,
    SolvedState,
};
pub use stage::{
    nash_target, nash_value_update, stage_game, PolicyTarget, StageEvaluator, StageSolver,
    TrainTarget,
};
pub use values::{ValueEntry, ValueTable};

#[cfg(test)]
mod tests;
