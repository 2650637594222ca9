//! Error type shared by the core modules.
//!
//! One crate-wide enum keeps the `?` plumbing simple; the variants fall into
//! three groups: construction/validation failures, evaluation failures
//! (reported with enough context to locate the offending operator), and
//! driver assertion failures (which carry the iteration index and both sides
//! of the violated inequality, since those are the values one needs to file
//! a meaningful bug).
//!
//! Scalar payloads are stored as `f64` regardless of the working precision;
//! they are diagnostics, not data.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- construction / validation -------------------------------------
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator pool is empty")]
    EmptyPool,

    #[error("string {string} is empty")]
    EmptyString { string: usize },

    #[error("block {block} is empty")]
    EmptyBlock { block: usize },

    #[error("index {index} out of range for pool of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coverage gap: pool member {index} appears in no string/block")]
    CoverageGap { index: usize },

    #[error("row {row} assigned to more than one block")]
    OverlappingBlocks { row: usize },

    #[error("weight {index} is {value}, expected a positive finite value")]
    WeightNotPositive { index: usize, value: f64 },

    #[error("weights must sum to 1 within {tol}, got {sum}")]
    WeightSumOff { sum: f64, tol: f64 },

    #[error("relaxation weight alpha = {0}, expected 0 < alpha <= 1")]
    AlphaOutOfRange(f64),

    #[error("relaxation parameter lambda = {0}, expected 0 <= lambda <= 2")]
    LambdaOutOfRange(f64),

    #[error("schedule value lambda_{k} = {lambda}, expected lambda in (0, 2)")]
    ScheduleOutOfRange { k: usize, lambda: f64 },

    #[error("epsilon = {0}, expected epsilon in (0, 1/2)")]
    EpsilonOutOfRange(f64),

    #[error("schedule value lambda_{k} = {lambda} outside the requested band [{lo}, {hi}]")]
    ScheduleOutsideBand { k: usize, lambda: f64, lo: f64, hi: f64 },

    #[error("step parameter mu = {0}, expected mu in (0, 2)")]
    MuOutOfRange(f64),

    #[error("invalid solver configuration: {0}")]
    ConfigInvalid(&'static str),

    #[error("matrix row {row} is zero; weights / projections are undefined for it")]
    ZeroRow { row: usize },

    #[error("block {block} has an all-zero matrix")]
    ZeroBlock { block: usize },

    #[error("supplied point {index} fails the operator's fixed-set test")]
    NotAFixedPoint { index: usize },

    #[error(
        "spectral band is empty for block {block}: inflated radius {rho} and epsilon {epsilon} \
         leave no admissible relaxation"
    )]
    SpectralBandEmpty { block: usize, rho: f64, epsilon: f64 },

    // --- evaluation -----------------------------------------------------
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("evaluation failed in string {string} at position {position} (operator {operator})")]
    StringEvaluation {
        string: usize,
        position: usize,
        operator: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step-size function returned sigma = {0}, expected a positive finite value")]
    SigmaNotPositive(f64),

    #[error("extrapolation factor sigma = {sigma} fell below the guaranteed lower bound 1")]
    SigmaBelowUnity { sigma: f64 },

    #[error("optimal step mu = {mu} fell below the guaranteed lower bound 1")]
    MuBelowUnity { mu: f64 },

    #[error(
        "oracle '{label}' returned a zero subgradient at a point with positive value {value}; \
         the constraint set is empty or the oracle is inconsistent"
    )]
    ZeroSubgradient { label: String, value: f64 },

    #[error("block {block} is feasible at this point; no step is defined")]
    BlockFeasible { block: usize },

    #[error("block {block} aggregated to a zero direction despite positive violations")]
    DegenerateBlock { block: usize },

    #[error("block {block} residual is zero; the block is already solved at this point")]
    BlockAlreadySolved { block: usize },

    #[error(
        "power iteration did not converge within {iterations} iterations \
         (last Rayleigh quotient {last})"
    )]
    PowerIterationNoConvergence { iterations: usize, last: f64 },

    // --- driver assertions ----------------------------------------------
    #[error("iteration {k}: {source}")]
    AtIteration {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("assertions require a reference solution, but none is available")]
    MissingReference,

    #[error(
        "Fejér monotonicity violated at iteration {k}: \
         ||x_next - z|| = {lhs} > {rhs} = ||x - z|| + slack"
    )]
    FejerViolation { k: usize, lhs: f64, rhs: f64 },

    #[error(
        "error-decrease bound violated at iteration {k}: \
         e_k - e_next = {lhs} < {rhs} = lambda(1-lambda)||T(x)-x||^2 - slack"
    )]
    ErrorBoundViolation { k: usize, lhs: f64, rhs: f64 },

    #[error("iterate became non-finite at iteration {k}")]
    NonFiniteIterate { k: usize },

    #[error("trace has no distance-to-reference column; bound comparison needs one")]
    MissingDistance,

    // --- file formats ----------------------------------------------------
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Wrap an error with the iteration index at which it surfaced.
    pub fn at_iteration(self, k: usize) -> Self {
        Error::AtIteration {
            k,
            source: Box::new(self),
        }
    }
}
