use std::fmt;

use thiserror::Error;

/// A single problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based door index the violation refers to, if any.
    pub door: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn global(message: impl Into<String>) -> Self {
        Self {
            door: None,
            message: message.into(),
        }
    }

    pub fn at_door(door: usize, message: impl Into<String>) -> Self {
        Self {
            door: Some(door),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.door {
            Some(door) => write!(f, "door {door}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfiguration(Vec<Violation>),

    #[error("invalid knock sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires {expected} dependency, configuration is {found}")]
    WrongDependency {
        expected: &'static str,
        found: &'static str,
    },

    #[error("expected time diverges: door {door} is not surely open and stops being knocked (after {knocks} knocks)")]
    Divergent { door: usize, knocks: u64 },

    #[error("horizon cap of {cap} knocks reached before the tolerance was met")]
    HorizonExceeded { cap: u64 },

    #[error("state space of {states} exceeds the configured cap of {cap}")]
    StateSpaceOverflow { states: u64, cap: u64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: u64 },

    #[error("{timeouts} of {trials} trials hit the knock cap of {cap}")]
    Timeout { trials: u64, timeouts: u64, cap: u64 },
}

impl Error {
    /// True for failures of the numeric machinery rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Divergent { .. }
                | Error::HorizonExceeded { .. }
                | Error::StateSpaceOverflow { .. }
                | Error::NonConvergence { .. }
                | Error::Timeout { .. }
        )
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
