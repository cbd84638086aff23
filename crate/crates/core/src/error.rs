use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate game: {0}")]
    DegenerateGame(String),

    #[error("payoff evaluation failed: {0}")]
    PayoffEvaluation(String),

    #[error("game is not zero-sum (or constant-sum): {0}")]
    NotZeroSum(String),

    #[error("oracle size exceeded: {what} is {size}, cap is {cap}")]
    OracleSizeExceeded {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("state is terminal")]
    TerminalState,

    #[error("illegal action for player {player}: {detail}")]
    IllegalAction { player: usize, detail: String },

    #[error("invalid order for unit at {location}: {reason}")]
    InvalidOrder { location: String, reason: String },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint version mismatch: file has version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint is for game '{found}' but '{expected}' was requested")]
    GameMismatch { found: String, expected: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("worker failed: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DegenerateGame(_) => "degenerate_game",
            Self::PayoffEvaluation(_) => "payoff_evaluation",
            Self::NotZeroSum(_) => "not_zero_sum",
            Self::OracleSizeExceeded { .. } => "oracle_size_exceeded",
            Self::TerminalState => "terminal_state",
            Self::IllegalAction { .. } => "illegal_action",
            Self::InvalidOrder { .. } => "invalid_order",
            Self::Unknown { .. } => "unknown",
            Self::InvalidDistribution(_) => "invalid_distribution",
            Self::InvalidMap(_) => "invalid_map",
            Self::Config(_) => "config",
            Self::Checkpoint(_) => "checkpoint",
            Self::VersionMismatch { .. } => "version_mismatch",
            Self::GameMismatch { .. } => "game_mismatch",
            Self::NonFinite(_) => "non_finite",
            Self::Worker(_) => "worker",
            Self::Io(_) => "io",
            Self::Json(_) => "json",
        }
    }
}
