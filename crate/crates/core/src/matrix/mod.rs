//! Restricted matrix games: sampled regret matching (linear, optimistic),
//! exact minimax oracles, and best responses.

mod exact;
mod game;
mod regret;
mod response;
mod strategy;

pub use exact::{exact_ne_2p0s, solve_matrix_lp, support_enumeration_2p0s, EXACT_MAX_ACTIONS};
pub use game::{advance, joint_count, RestrictedStageGame};
pub use regret::{
    expected_payoffs, regret_matching_policy, rm_step_with_sample, sampled_rm_step,
    solve_restricted, EquilibriumResult, RegretState, RmConfig, SolverConfig,
    DEFAULT_EXACT_CAP, DEFAULT_MC_SAMPLES, DEFAULT_RM_ITERATIONS,
};
pub use response::{action_values, best_response_value, exploitability, nash_conv};
pub use strategy::{sample_index, MixedStrategy};
