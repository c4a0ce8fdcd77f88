use thiserror::Error;

/// Errors produced by the modelling and accounting modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input (ASCII grid, class table CSV).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two rasters do not share the same geometry.
    #[error("{field} mismatch: {left} vs {right}")]
    Misaligned {
        field: &'static str,
        left: f64,
        right: f64,
    },

    /// A grid that violates a structural invariant.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Grid with no valid cell where at least one is required.
    #[error("grid contains no valid cells")]
    AllNodata,

    /// Interior cell with no downhill or resolvable flat neighbour.
    #[error("unresolved flat at ({row}, {col}): no descending or traversable neighbour")]
    UnresolvedFlat { row: usize, col: usize },

    /// Flow-direction graph contains a cycle.
    #[error(
        "flow directions contain a cycle ({remaining} cells unreachable in topological order)"
    )]
    FlowCycle { remaining: usize },

    /// Land-cover class with no entry in the parameter table.
    #[error("land-cover class {class} missing from the parameter table")]
    MissingClass { class: u32 },

    /// Parameter outside its admissible range.
    #[error("parameter {name} for class {class} out of range: {value} not in {range}")]
    ParamRange {
        name: &'static str,
        class: u32,
        value: f64,
        range: &'static str,
    },

    /// Asset mask selects no cells.
    #[error("asset mask selects no cells")]
    EmptyMask,

    /// Optimal-scenario substitution with no native class to draw from.
    #[error("no class is flagged native; optimal scenario is undefined")]
    NoNativeClass,

    /// Two per-class maps keyed by different class sets.
    #[error("class sets differ: {context}")]
    ClassSetMismatch { context: String },

    /// Discount rate outside (0, inf).
    #[error("discount rate must be positive, got {0}")]
    NonPositiveRate(f64),

    /// Annuity horizon below one year.
    #[error("horizon must be at least 1 year, got {0}")]
    InvalidHorizon(u32),

    /// Negative quantity where only non-negative flows are meaningful.
    #[error("{name} must be non-negative, got {value}")]
    NegativeQuantity { name: &'static str, value: f64 },

    /// Social-cost-of-carbon price index out of range.
    #[error("SCC price index {index} out of range (have {len} prices)")]
    SccIndex { index: usize, len: usize },

    /// A required service account was not supplied.
    #[error("missing physical account for service {0:?}")]
    MissingService(String),

    /// A statement was asked for a period it does not cover.
    #[error("missing period {0:?}")]
    MissingPeriod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
