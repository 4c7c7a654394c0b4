use thiserror::Error;

use crate::rational::Rational;

/// A defect found while validating an ordinal profile.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileViolation {
    #[error("profile has no agents")]
    NoAgents,
    #[error("profile has no items")]
    NoItems,
    #[error("agent {agent}: item {item} is out of range")]
    OutOfRange { agent: usize, item: usize },
    #[error("agent {agent}: item {item} appears more than once")]
    Duplicate { agent: usize, item: usize },
    #[error("agent {agent}: item {item} is missing")]
    Missing { agent: usize, item: usize },
    #[error("declared n = {declared} but {actual} preference rows given")]
    AgentCount { declared: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    RationalParse(String),
    #[error("invalid profile: {0}")]
    Profile(#[from] ProfileViolation),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("agent {agent} is out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("item {item} is out of range for {m} items")]
    ItemOutOfRange { item: usize, m: usize },
    #[error("utility {value} for item {item} is outside [0, 1]")]
    UtilityOutOfRange { item: usize, value: Rational },
    #[error("utilities are not strictly decreasing along agent {agent}'s ordering at rank {rank}")]
    IncompatibleUtilities { agent: usize, rank: usize },
    #[error("interested set of agent {agent} is not a prefix of its ordering")]
    InterestedNotPrefix { agent: usize },
    #[error("interested set must hold between 1 and {m} items, got {k}")]
    InterestedSize { k: usize, m: usize },
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("invalid pause plan for agent {agent}: {reason}")]
    PausePlan { agent: usize, reason: String },
}
