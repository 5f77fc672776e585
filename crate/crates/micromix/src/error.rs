//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// Variants carry enough context to be actionable from a CLI message;
/// numeric payloads are the offending values, not formatted strings.
#[derive(Debug, Error)]
pub enum Error {
    // -- network construction -------------------------------------------
    #[error("host index {index} out of range for {host_count} hosts")]
    IndexOutOfRange { index: usize, host_count: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("edge ({i}, {j}) has rate {rate} (must be finite and > 0)")]
    NonPositiveRate { i: usize, j: usize, rate: f64 },
    #[error("self-loop on host {index}")]
    SelfLoop { index: usize },
    #[error("interaction strength gamma = {gamma} outside [0, 0.5]")]
    InvalidGamma { gamma: f64 },
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("total interaction rate is zero")]
    ZeroTotalRate,

    // -- integration -----------------------------------------------------
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("flow escaped [0, {domain_bound}]^n by {excess} (exceeds 10*abs_tol)")]
    IntegrationEscape { domain_bound: f64, excess: f64 },
    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },

    // -- attractors and basins --------------------------------------------
    #[error("{failed} of {total} grid points failed to settle near an attractor")]
    NonConvergentFlow { failed: usize, total: usize },
    #[error("no attractors found on the search grid")]
    NoAttractorsFound,

    // -- stochastic simulation --------------------------------------------
    #[error("edge list is empty")]
    EmptyEdgeList,
    #[error("scheduled events are not strictly increasing at index {index}")]
    UnsortedEvents { index: usize },
    #[error("scheduled event on ({i}, {j}) which is not a network edge")]
    UnknownEdge { i: usize, j: usize },
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),

    // -- LFA engine --------------------------------------------------------
    #[error("gamma = {gamma} lies in a basin-boundary interval {intervals}")]
    GammaOnBoundary { gamma: f64, intervals: String },
    #[error("basin classification unresolved for attractor pair ({a}, {b})")]
    UnresolvedClassification { a: usize, b: usize },
    #[error("no transition map for edge ({i}, {j})")]
    MissingEdgeMap { i: usize, j: usize },
    #[error("basin tensor would have {entries} entries (cap {cap})")]
    TensorTooLarge { entries: u128, cap: usize },
    #[error("probability entry {value} below -1e-6 during pair evolution")]
    NegativeProbability { value: f64 },

    // -- harness ------------------------------------------------------------
    #[error("all {runs} ensemble runs failed; first failure: {first}")]
    AllRunsFailed { runs: usize, first: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad quantiles ({lo}, {hi}): need 0 <= lo < hi <= 100")]
    BadQuantiles { lo: f64, hi: f64 },
    #[error("empty input")]
    EmptyInput,

    // -- config / CLI ---------------------------------------------------------
    #[error("cannot read {path}: {source}")]
    FileNotFound {
        path: String,
        source: std::io::Error,
    },
    #[error("config schema violation at /{pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("mode {mode} requires field {field}")]
    ModeFieldMissing {
        mode: &'static str,
        field: &'static str,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit status for this error: 2 for configuration problems,
    /// 3 for numerical failures.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::IndexOutOfRange { .. }
            | Error::DuplicateEdge { .. }
            | Error::NonPositiveRate { .. }
            | Error::SelfLoop { .. }
            | Error::InvalidGamma { .. }
            | Error::DimensionMismatch { .. }
            | Error::ZeroTotalRate
            | Error::EmptyEdgeList
            | Error::UnsortedEvents { .. }
            | Error::UnknownEdge { .. }
            | Error::ConfigInvalid(_)
            | Error::GammaOnBoundary { .. }
            | Error::MissingEdgeMap { .. }
            | Error::TensorTooLarge { .. }
            | Error::ShapeMismatch(_)
            | Error::BadQuantiles { .. }
            | Error::EmptyInput
            | Error::FileNotFound { .. }
            | Error::SchemaViolation { .. }
            | Error::ModeFieldMissing { .. } => 2,
            Error::StepUnderflow { .. }
            | Error::IntegrationEscape { .. }
            | Error::NonFiniteDerivative { .. }
            | Error::NonConvergentFlow { .. }
            | Error::NoAttractorsFound
            | Error::UnresolvedClassification { .. }
            | Error::NegativeProbability { .. }
            | Error::AllRunsFailed { .. } => 3,
            Error::Io(_) => 3,
        }
    }
}
