//! Error types.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum BlockError {
    /// Point outside the joint convergence region of the OPE channels.
    OutsideConvergence { rho_abs: f64 },
    InvalidPoint(String),
    /// Requested derivative order above the configured maximum.
    OrderTooLarge { requested: u32, max: u32 },
    /// Level system of the Casimir recursion singular even after nudging.
    SingularRecursion { delta: f64, spin: u32, level: u32 },
}

impl fmt::Display for BlockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockError::OutsideConvergence { rho_abs } => {
                write!(f, "point outside convergence region (|rho| = {rho_abs})")
            }
            BlockError::InvalidPoint(s) => write!(f, "invalid point: {s}"),
            BlockError::OrderTooLarge { requested, max } => {
                write!(f, "derivative order {requested} exceeds configured maximum {max}")
            }
            BlockError::SingularRecursion { delta, spin, level } => write!(
                f,
                "singular Casimir recursion at delta = {delta}, spin = {spin}, level = {level}"
            ),
        }
    }
}

impl std::error::Error for BlockError {}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityError {
    /// Inputs outside the engine's domain, e.g. Delta2 above the gap window.
    Domain(String),
    /// Solver hit its iteration or round cap.
    SolverFailure(String),
    /// Per-call wall budget exhausted.
    Timeout,
    Block(BlockError),
}

impl fmt::Display for FeasibilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityError::Domain(s) => write!(f, "domain error: {s}"),
            FeasibilityError::SolverFailure(s) => write!(f, "solver failure: {s}"),
            FeasibilityError::Timeout => write!(f, "wall-time budget exhausted"),
            FeasibilityError::Block(e) => write!(f, "block evaluation: {e}"),
        }
    }
}

impl std::error::Error for FeasibilityError {}

impl From<BlockError> for FeasibilityError {
    fn from(e: BlockError) -> Self {
        FeasibilityError::Block(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetError {
    /// Parse or invariant violation, with 1-based line number when known.
    Parse { line: usize, msg: String },
    Invalid(String),
    Domain(String),
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
            DatasetError::Invalid(s) => write!(f, "invalid dataset: {s}"),
            DatasetError::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

impl std::error::Error for DatasetError {}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, msg: String },
    UnknownKey { line: usize, key: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, msg } => write!(f, "config line {line}: {msg}"),
            ConfigError::UnknownKey { line, key } => {
                write!(f, "config line {line}: unknown key `{key}`")
            }
            ConfigError::Invalid(s) => write!(f, "invalid config: {s}"),
        }
    }
}

impl std::error::Error for ConfigError {}
