//! Solver toolkit for convex feasibility problems built from pools of
//! strictly quasi-nonexpansive (sQNE) operators.
//!
//! The central algorithmic idea: split a feasibility problem into many cheap
//! operators (halfspace projections, linear block steps, subgradient
//! projections), compose them along *strings*, average the string outputs,
//! and then over-relax the averaged step by the largest factor that provably
//! preserves Fejér monotonicity,
//!
//! ```text
//! x_{k+1} = x_k + lambda_k * sigma(x_k) * (T(x_k) - x_k),
//! sigma_max(x) = sum_t w_t ||U_t(x) - x||^2 / ||T(x) - x||^2,
//! ```
//!
//! where `U_t` is the composition along string `t` and `T` the weighted
//! average of the `U_t`. Convexity of the squared norm gives
//! `sigma_max >= 1`, so the scheme only ever lengthens the averaged step
//! ("extrapolation"); with one string it degenerates to `sigma = 1`.
//!
//! Modules:
//!
//! * [`operator`] — operator handles, relaxations, property certificates
//!   (QNE / sQNE / cutter spot checks).
//! * [`strings`] — string plans, the averaged operator, `sigma_max`, the
//!   iteration driver with trace capture, and error-bound reports.
//! * [`linear`] — block operators for consistent linear systems with Cimmino
//!   weights, spectral-radius-safe and residual-minimizing relaxation.
//! * [`subgrad`] — cyclic and parallel subgradient projection operators for
//!   systems of convex inequalities, with the optimal extrapolated step.
//!
//! Everything numeric is generic over [`Scalar`] (`f32`/`f64`); the `*64`
//! aliases below fix the default double-precision instantiations.
//!
//! Evaluation is deliberately sequential and allocation-straightforward:
//! iteration traces are part of the artifact contract and must be
//! reproducible bit-for-bit across runs, which rules out nondeterministic
//! reduction orders.

pub mod error;
pub mod linear;
pub mod operator;
pub mod scalar;
pub mod strings;
pub mod subgrad;
pub mod tol;
pub mod vecops;

pub use error::{Error, Result};
pub use scalar::{real, Scalar};

pub use operator::{
    check_property, generalized_relax, relax, OperatorHandle, OperatorProperty,
    PropertyCheckReport, RelaxationSpec, StepRule,
};
pub use strings::{
    compare_error_bounds, iterate, AveragedOperator, BoundComparisonReport, IterationTrace,
    LambdaSchedule, ProblemContext, SolveOutcome, SolverConfig, StepMode, StringEvaluation,
    StringPlan, TerminalStatus, TraceRow,
};

/// Double-precision operator handle (the default instantiation).
pub type Operator64 = operator::OperatorHandle<f64>;
/// Double-precision string plan.
pub type StringPlan64 = strings::StringPlan<f64>;
/// Double-precision averaged operator.
pub type Averaged64 = strings::AveragedOperator<f64>;
/// Double-precision solver configuration.
pub type SolverConfig64 = strings::SolverConfig<f64>;
/// Double-precision linear block problem.
pub type LinearBlockProblem64 = linear::LinearBlockProblem<f64>;
/// Double-precision convex-function oracle.
pub type Oracle64 = subgrad::ConvexFunctionOracle<f64>;
/// Double-precision inequality block system.
pub type BlockSystem64 = subgrad::InequalityBlockSystem<f64>;
