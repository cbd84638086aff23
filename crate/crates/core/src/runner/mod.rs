//! Training orchestration: run configuration, game registry, replay
//! buffer, producer/consumer self-play, checkpoints and metrics.

mod buffer;
mod checkpoint;
mod config;
mod games;
mod metrics;
pub(crate) mod train;

pub use buffer::ReplayBuffer;
pub use checkpoint::{peek_checkpoint, Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::{ProposalMode, RunConfig, DEFAULT_BATCH_SIZE, DEFAULT_BUFFER_CAPACITY};
pub use games::{build_game, GameInstance, DEFAULT_HORIZON, GAME_NAMES};
pub use metrics::{MetricsRow, MetricsSink, METRICS_HEADER};
pub use train::{train, train_with_hook, Snapshot, TrainOutcome, TrainStats};

#[cfg(test)]
mod tests;
