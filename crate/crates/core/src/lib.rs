//! Reinforcement learning in the repeated prisoner's dilemma with memory-one
//! strategies.
//!
//! - [`game`]: stage payoffs, joint states, induced Markov chain.
//! - [`strategy`]: memory-one strategies, the sixteen deterministic ones,
//!   implementation error.
//! - [`solver`]: exact action values and best responses (policy iteration,
//!   value iteration).
//! - [`closed_form`]: analytic values of the sixteen symmetric candidates and
//!   the best-response atlas against TFT, WSLS and Grim.
//! - [`equilibrium`]: symmetric equilibria, gamma scans, alternating
//!   best-response dynamics.
//! - [`qlearning`]: tabular Q-learning simulation and CSV export.

pub mod closed_form;
pub mod equilibrium;
pub mod game;
pub mod qlearning;
pub mod solver;
pub mod strategy;

pub use closed_form::{
    best_response_region, candidate_regions, case_consistent, case_q, BestResponseRegion,
    CaseSolution, FixedOpponent,
};
pub use equilibrium::{
    alternating_dynamics, equilibrium_scan, symmetric_equilibria, DynamicsTrace, EquilibriumReport,
    GammaGrid,
};
pub use game::{transition_matrix, Action, Payoffs, PdGame, Player, StateProfile, TransitionMatrix};
pub use qlearning::{
    alternating_qlearning, export_trace, learn_phase, LearnerConfig, LearningTrace,
};
pub use solver::{
    bellman_residual, best_response, policy_evaluation, value_iteration, BestResponseResult,
    GreedyPolicy, QTable,
};
pub use strategy::{
    catalog, DeterministicStrategy, MemoryOneStrategy, NamedStrategy, NoisyStrategy,
};
