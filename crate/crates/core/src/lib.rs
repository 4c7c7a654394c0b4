//! Exact Probabilistic Serial (simultaneous eating) engine and tools for
//! measuring how much a single agent can gain by misreporting.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod instance;
pub mod manipulation;
pub mod model;
pub mod rational;
pub mod theory;

pub use engine::{completion_time, remaining_at, run_ps, run_with_pauses, EngineError};
pub use error::{ModelError, ProfileViolation};
pub use experiment::{run_grid, CellStats, ExperimentConfig, GridResults};
pub use instance::Instance;
pub use manipulation::{best_response, best_response_parallel, IncentiveRatio, ManipulationResult, SearchSpace};
pub use model::{
    expected_utility, validate_profile, CardinalUtilities, DichotomousValuation, EatingTrace, Horizon, OrdinalProfile,
    PauseInterval, PausePlan, Segment, Valuation,
};
pub use rational::Rational;
