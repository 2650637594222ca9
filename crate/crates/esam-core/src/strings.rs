//! String plans, the averaged operator, the extrapolated step size, and the
//! iteration driver.
//!
//! A *string* is an ordered list of pool indices; evaluating it composes the
//! corresponding operators in order. A [`StringPlan`] holds `E` strings with
//! positive weights summing to one, and every pool member must appear in at
//! least one string (coverage — otherwise part of the problem would simply
//! be ignored). The induced operator is
//!
//! ```text
//! U_t(x) = T_{i_mt} ( ... T_{i_2} ( T_{i_1} (x) ) ),
//! T(x)   = sum_t w_t U_t(x).
//! ```
//!
//! If every pool member is sQNE with common fixed points, so is `T`, and the
//! per-point extrapolation factor
//!
//! ```text
//! sigma_max(x) = sum_t w_t ||U_t(x) - x||^2 / ||T(x) - x||^2
//! ```
//!
//! is always `>= 1` (convexity of the squared norm), with equality when
//! `E = 1`. The driver [`iterate`] runs
//! `x_{k+1} = x_k + lambda_k * sigma(x_k) * (T(x_k) - x_k)` with trace
//! capture, a squared-step fixed-point guard, and optional hard assertions
//! of Fejér monotonicity and the per-iteration error-decrease bound against
//! a known solution.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::OperatorHandle;
use crate::scalar::{approx_f64, real, Scalar};
use crate::tol;
use crate::vecops as vo;

/// Strings over an operator pool plus their weights.
///
/// Weights are normalized to sum to one on construction; the raw values only
/// fix the proportions.
#[derive(Clone, Debug)]
pub struct StringPlan<S: Scalar> {
    strings: Vec<Vec<usize>>,
    weights: Vec<S>,
    pool_size: usize,
}

impl<S: Scalar> StringPlan<S> {
    /// Build and validate a plan over a pool of `pool_size` operators.
    ///
    /// Requirements: at least one string; every string nonempty; indices in
    /// range; every pool member covered by some string; one positive weight
    /// per string. Repeats within a string are allowed (an operator may be
    /// applied several times along one composition).
    pub fn new(strings: Vec<Vec<usize>>, weights: Vec<S>, pool_size: usize) -> Result<Self> {
        if pool_size == 0 {
            return Err(Error::EmptyPool);
        }
        if strings.is_empty() {
            return Err(Error::ConfigInvalid("plan has no strings"));
        }
        if weights.len() != strings.len() {
            return Err(Error::DimensionMismatch {
                expected: strings.len(),
                got: weights.len(),
            });
        }
        let mut covered = vec![false; pool_size];
        for (t, string) in strings.iter().enumerate() {
            if string.is_empty() {
                return Err(Error::EmptyString { string: t });
            }
            for &idx in string {
                if idx >= pool_size {
                    return Err(Error::IndexOutOfRange {
                        index: idx,
                        len: pool_size,
                    });
                }
                covered[idx] = true;
            }
        }
        if let Some(missing) = covered.iter().position(|&c| !c) {
            return Err(Error::CoverageGap { index: missing });
        }
        let mut sum = S::zero();
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > S::zero()) {
                return Err(Error::WeightNotPositive {
                    index: i,
                    value: approx_f64(w),
                });
            }
            sum = sum + w;
        }
        let weights: Vec<S> = weights.into_iter().map(|w| w / sum).collect();
        let check: S = weights.iter().copied().sum();
        if (check - S::one()).abs() > real::<S>(tol::WEIGHT_SUM_TOL) {
            return Err(Error::WeightSumOff {
                sum: approx_f64(check),
                tol: tol::WEIGHT_SUM_TOL,
            });
        }
        Ok(StringPlan {
            strings,
            weights,
            pool_size,
        })
    }

    /// Equal weights `1/E` over the given strings.
    pub fn uniform(strings: Vec<Vec<usize>>, pool_size: usize) -> Result<Self> {
        let e = strings.len().max(1);
        let w = vec![S::one() / real::<S>(e as f64); strings.len()];
        Self::new(strings, w, pool_size)
    }

    /// One length-one string per pool member, equal weights (the fully
    /// simultaneous plan).
    pub fn singletons(pool_size: usize) -> Result<Self> {
        Self::uniform((0..pool_size).map(|i| vec![i]).collect(), pool_size)
    }

    /// A single string running through the whole pool in order (the fully
    /// sequential plan, `E = 1`).
    pub fn sequential(pool_size: usize) -> Result<Self> {
        Self::uniform(vec![(0..pool_size).collect()], pool_size)
    }

    pub fn strings(&self) -> &[Vec<usize>] {
        &self.strings
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Number of strings `E`.
    pub fn num_strings(&self) -> usize {
        self.strings.len()
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }
}

/// Per-evaluation byproducts of the averaged operator: all string outputs
/// and their weighted average. Returned (rather than cached internally) so
/// evaluation stays reentrant and the driver can reuse both without
/// recomputation.
#[derive(Clone, Debug)]
pub struct StringEvaluation<S: Scalar> {
    /// `U_t(x)` for each string `t`, in plan order.
    pub string_points: Vec<Vec<S>>,
    /// `T(x) = sum_t w_t U_t(x)`.
    pub averaged: Vec<S>,
}

/// An operator pool tied to a string plan.
#[derive(Clone)]
pub struct AveragedOperator<S: Scalar> {
    pool: Vec<OperatorHandle<S>>,
    plan: StringPlan<S>,
    dim: usize,
}

impl<S: Scalar> AveragedOperator<S> {
    pub fn new(pool: Vec<OperatorHandle<S>>, plan: StringPlan<S>) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        if plan.pool_size() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                got: plan.pool_size(),
            });
        }
        let dim = pool[0].dim();
        for op in &pool {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
        }
        Ok(AveragedOperator { pool, plan, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn plan(&self) -> &StringPlan<S> {
        &self.plan
    }

    pub fn pool(&self) -> &[OperatorHandle<S>] {
        &self.pool
    }

    /// Evaluate every string at `x` and average the results.
    ///
    /// Strings are independent of each other; they are evaluated in plan
    /// order and summed left to right so results are bit-reproducible.
    /// Failures are wrapped with the string index, the position within the
    /// string, and the pool index of the offending operator.
    pub fn evaluate_strings(&self, x: &[S]) -> Result<StringEvaluation<S>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut string_points = Vec::with_capacity(self.plan.num_strings());
        for (t, string) in self.plan.strings().iter().enumerate() {
            let mut y = x.to_vec();
            for (pos, &op_idx) in string.iter().enumerate() {
                y = self.pool[op_idx].apply(&y).map_err(|e| Error::StringEvaluation {
                    string: t,
                    position: pos,
                    operator: op_idx,
                    source: Box::new(e),
                })?;
            }
            string_points.push(y);
        }
        let mut averaged = vec![S::zero(); self.dim];
        for (w, y) in self.plan.weights().iter().zip(&string_points) {
            vo::add_scaled(&mut averaged, *w, y);
        }
        Ok(StringEvaluation {
            string_points,
            averaged,
        })
    }

    /// Shorthand for the averaged value `T(x)` alone.
    pub fn apply(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(self.evaluate_strings(x)?.averaged)
    }

    /// The extrapolation factor
    /// `sigma_max(x) = sum_t w_t ||U_t(x)-x||^2 / ||T(x)-x||^2`.
    ///
    /// When the squared averaged step is at or below `guard` the point is
    /// treated as fixed and the conventional value 1 is returned. The
    /// theoretical lower bound `sigma_max >= 1` is enforced: a value below
    /// `1 - SIGMA_UNITY_SLACK` is a hard error, not a warning.
    pub fn sigma_max(&self, x: &[S], eval: &StringEvaluation<S>, guard: S) -> Result<S> {
        let denom_sq = vo::distance_sq(&eval.averaged, x);
        if !denom_sq.is_finite() {
            return Err(Error::NonFinite {
                context: "averaged step norm".into(),
            });
        }
        if denom_sq <= guard {
            return Ok(S::one());
        }
        let mut num = S::zero();
        for (t, (w, y)) in self.plan.weights().iter().zip(&eval.string_points).enumerate() {
            let term = *w * vo::distance_sq(y, x);
            if !term.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("string {t} squared step"),
                });
            }
            num = num + term;
        }
        let sigma = num / denom_sq;
        if !sigma.is_finite() {
            return Err(Error::NonFinite {
                context: "extrapolation factor".into(),
            });
        }
        if sigma < S::one() - real::<S>(tol::SIGMA_UNITY_SLACK) {
            return Err(Error::SigmaBelowUnity {
                sigma: approx_f64(sigma),
            });
        }
        Ok(sigma)
    }
}

/// Relaxation parameter sequence `k -> lambda_k`.
#[derive(Clone, Debug)]
pub enum LambdaSchedule<S: Scalar> {
    Constant(S),
    /// Explicit leading values; iterations beyond the end reuse the last
    /// entry.
    Sequence(Vec<S>),
}

impl<S: Scalar> LambdaSchedule<S> {
    pub fn value_at(&self, k: usize) -> S {
        match self {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(v) => *v.get(k).unwrap_or_else(|| {
                v.last().expect("validated schedules are nonempty")
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |k: usize, l: S| -> Result<()> {
            if !(l.is_finite() && l > S::zero() && l < real::<S>(2.0)) {
                return Err(Error::ScheduleOutOfRange {
                    k,
                    lambda: approx_f64(l),
                });
            }
            Ok(())
        };
        match self {
            LambdaSchedule::Constant(l) => check(0, *l),
            LambdaSchedule::Sequence(v) => {
                if v.is_empty() {
                    return Err(Error::ConfigInvalid("lambda sequence is empty"));
                }
                v.iter().enumerate().try_for_each(|(k, &l)| check(k, l))
            }
        }
    }

    fn validate_band(&self, lo: S, hi: S) -> Result<()> {
        let check = |k: usize, l: S| -> Result<()> {
            if l < lo || l > hi {
                return Err(Error::ScheduleOutsideBand {
                    k,
                    lambda: approx_f64(l),
                    lo: approx_f64(lo),
                    hi: approx_f64(hi),
                });
            }
            Ok(())
        };
        match self {
            LambdaSchedule::Constant(l) => check(0, *l),
            LambdaSchedule::Sequence(v) => {
                v.iter().enumerate().try_for_each(|(k, &l)| check(k, l))
            }
        }
    }
}

/// Step-size mode of the driver.
#[derive(Clone, Debug)]
pub enum StepMode<S: Scalar> {
    /// Extrapolated: `sigma(x) = sigma_max(x)` recomputed every iteration.
    SigmaMax,
    /// Fixed `sigma`; `Constant(1)` is the plain (non-extrapolated) method.
    Constant(S),
}

/// Driver configuration.
#[derive(Clone, Debug)]
pub struct SolverConfig<S: Scalar> {
    pub lambda: LambdaSchedule<S>,
    /// When set, every `lambda_k` must lie in the theoretical convergence
    /// band `[epsilon, 1 - epsilon]`. Left `None` for the experiment
    /// protocol, which runs `lambda_k = 1` outside that band.
    pub epsilon: Option<S>,
    pub step_mode: StepMode<S>,
    pub max_iters: usize,
    /// Stopping level for the problem's feasibility-violation measure.
    pub feasibility_tol: S,
    /// Threshold on the *squared* step norm `||T(x_k)-x_k||^2`.
    pub fixed_point_guard: S,
    /// Hard-assert Fejér monotonicity against the reference solution.
    pub assert_fejer: bool,
    /// Hard-assert the error-decrease bound (armed only when
    /// `lambda_k` is in `(0,1)`, where the bound is nontrivial).
    pub assert_error_bound: bool,
}

impl<S: Scalar> Default for SolverConfig<S> {
    fn default() -> Self {
        SolverConfig {
            lambda: LambdaSchedule::Constant(S::one()),
            epsilon: None,
            step_mode: StepMode::SigmaMax,
            max_iters: 20_000,
            feasibility_tol: real(1e-4),
            fixed_point_guard: real(tol::DEFAULT_FIXED_POINT_GUARD),
            assert_fejer: false,
            assert_error_bound: false,
        }
    }
}

impl<S: Scalar> SolverConfig<S> {
    pub fn validate(&self) -> Result<()> {
        self.lambda.validate()?;
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > S::zero() && eps < real::<S>(0.5)) {
                return Err(Error::EpsilonOutOfRange(approx_f64(eps)));
            }
            self.lambda.validate_band(eps, S::one() - eps)?;
        }
        if let StepMode::Constant(c) = self.step_mode {
            if !(c.is_finite() && c > S::zero()) {
                return Err(Error::SigmaNotPositive(approx_f64(c)));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::ConfigInvalid("max_iters must be at least 1"));
        }
        if !(self.feasibility_tol.is_finite() && self.feasibility_tol > S::zero()) {
            return Err(Error::ConfigInvalid("feasibility_tol must be positive"));
        }
        if !(self.fixed_point_guard.is_finite() && self.fixed_point_guard > S::zero()) {
            return Err(Error::ConfigInvalid("fixed_point_guard must be positive"));
        }
        Ok(())
    }
}

/// What the driver knows about the problem beyond the operator: how to
/// measure infeasibility, and (optionally) a known solution for distance
/// tracking and assertions.
#[derive(Clone)]
pub struct ProblemContext<S: Scalar> {
    violation: Arc<dyn Fn(&[S]) -> S + Send + Sync>,
    reference: Option<Vec<S>>,
}

impl<S: Scalar> ProblemContext<S> {
    /// `violation(x)` must be a nonnegative infeasibility measure (e.g.
    /// `max_i g_i^+(x)` or a relative residual) that vanishes on the
    /// solution set.
    pub fn new<F>(violation: F) -> Self
    where
        F: Fn(&[S]) -> S + Send + Sync + 'static,
    {
        ProblemContext {
            violation: Arc::new(violation),
            reference: None,
        }
    }

    pub fn with_reference(mut self, z: Vec<S>) -> Self {
        self.reference = Some(z);
        self
    }

    pub fn reference(&self) -> Option<&[S]> {
        self.reference.as_deref()
    }

    pub fn violation_at(&self, x: &[S]) -> S {
        (self.violation)(x)
    }
}

/// Why the driver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalStatus {
    /// The violation measure reached `feasibility_tol`.
    FeasibilityReached,
    /// The squared step norm fell below `fixed_point_guard` first.
    GuardTriggered,
    /// The iteration budget ran out.
    MaxIters,
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminalStatus::FeasibilityReached => "feasibility-reached",
            TerminalStatus::GuardTriggered => "guard-triggered",
            TerminalStatus::MaxIters => "max-iters",
        })
    }
}

/// One trace record: the state *before* the update at iteration `k`.
#[derive(Clone, Debug)]
pub struct TraceRow<S: Scalar> {
    pub k: usize,
    /// Step-size factor used for the update from this state.
    pub sigma: S,
    /// Relaxation parameter scheduled for this iteration.
    pub lambda: S,
    /// `||T(x_k) - x_k||`.
    pub step_norm: S,
    /// Problem violation measure at `x_k`.
    pub violation: S,
    /// `||x_k - z||` when a reference solution is known.
    pub distance: Option<S>,
}

/// Full iteration history. Rows are recorded at the pre-update state for
/// `k = 0, 1, ...`, including one terminal row, so "iterations to reach a
/// tolerance" is simply the index of the first row meeting it.
#[derive(Clone, Debug)]
pub struct IterationTrace<S: Scalar> {
    pub rows: Vec<TraceRow<S>>,
    pub terminal_status: TerminalStatus,
}

impl<S: Scalar> IterationTrace<S> {
    /// Index of the first row whose violation is at or below `tol`.
    pub fn iterations_to_tolerance(&self, tol: S) -> Option<usize> {
        self.rows.iter().find(|r| r.violation <= tol).map(|r| r.k)
    }

    /// Number of updates performed (index of the terminal row).
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn final_row(&self) -> Option<&TraceRow<S>> {
        self.rows.last()
    }
}

/// Result of a driver run: the final iterate plus the full trace.
#[derive(Clone, Debug)]
pub struct SolveOutcome<S: Scalar> {
    pub point: Vec<S>,
    pub trace: IterationTrace<S>,
}

/// Run `x_{k+1} = x_k + lambda_k sigma(x_k) (T(x_k) - x_k)`.
///
/// Stopping is checked in a fixed order at each state: feasibility first,
/// then the fixed-point guard on the squared step, then the iteration
/// budget. The returned trace carries one row per visited state including
/// the terminal one.
///
/// With `assert_fejer`, each update must satisfy
/// `||x_{k+1} - z|| <= ||x_k - z|| + FEJER_SLACK (1 + ||z||)`; with
/// `assert_error_bound` and `lambda_k` in `(0,1)`,
/// `e_k - e_{k+1} >= lambda_k (1 - lambda_k) ||T(x_k)-x_k||^2 -
/// BOUND_SLACK (1 + e_k)` where `e_k = ||x_k - z||^2`. Violations abort
/// with the iteration index and both sides. Both assertions require a
/// reference solution in the context.
pub fn iterate<S: Scalar>(
    op: &AveragedOperator<S>,
    x0: &[S],
    cfg: &SolverConfig<S>,
    ctx: &ProblemContext<S>,
) -> Result<SolveOutcome<S>> {
    cfg.validate()?;
    if x0.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x0.len(),
        });
    }
    if !vo::all_finite(x0) {
        return Err(Error::NonFinite {
            context: "starting point".into(),
        });
    }
    let reference = ctx.reference();
    if let Some(z) = reference {
        if z.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: z.len(),
            });
        }
    } else if cfg.assert_fejer || cfg.assert_error_bound {
        return Err(Error::MissingReference);
    }
    let fejer_slack = reference
        .map(|z| real::<S>(tol::FEJER_SLACK) * (S::one() + vo::norm(z)));

    let mut x = x0.to_vec();
    let mut rows = Vec::new();
    let terminal_status;
    let mut k = 0usize;
    loop {
        let eval = op
            .evaluate_strings(&x)
            .map_err(|e| e.at_iteration(k))?;
        let step_sq = vo::distance_sq(&eval.averaged, &x);
        let violation = ctx.violation_at(&x);
        if !violation.is_finite() {
            return Err(Error::NonFinite {
                context: "violation measure".into(),
            }
            .at_iteration(k));
        }
        let sigma = match cfg.step_mode {
            StepMode::SigmaMax => op
                .sigma_max(&x, &eval, cfg.fixed_point_guard)
                .map_err(|e| e.at_iteration(k))?,
            StepMode::Constant(c) => c,
        };
        let lambda = cfg.lambda.value_at(k);
        let distance = reference.map(|z| vo::distance(&x, z));
        rows.push(TraceRow {
            k,
            sigma,
            lambda,
            step_norm: step_sq.sqrt(),
            violation,
            distance,
        });

        if violation <= cfg.feasibility_tol {
            terminal_status = TerminalStatus::FeasibilityReached;
            break;
        }
        if step_sq <= cfg.fixed_point_guard {
            terminal_status = TerminalStatus::GuardTriggered;
            break;
        }
        if k >= cfg.max_iters {
            terminal_status = TerminalStatus::MaxIters;
            break;
        }

        let coef = lambda * sigma;
        let step = vo::sub(&eval.averaged, &x);
        let x_next = vo::affine_step(&x, coef, &step);
        if !vo::all_finite(&x_next) {
            return Err(Error::NonFiniteIterate { k });
        }

        if let Some(z) = reference {
            let dist_now = distance.expect("distance recorded when reference is known");
            let dist_next = vo::distance(&x_next, z);
            if cfg.assert_fejer {
                let allowed = dist_now + fejer_slack.expect("slack precomputed");
                if dist_next > allowed {
                    return Err(Error::FejerViolation {
                        k,
                        lhs: approx_f64(dist_next),
                        rhs: approx_f64(allowed),
                    });
                }
            }
            if cfg.assert_error_bound && lambda > S::zero() && lambda < S::one() {
                let e_now = dist_now * dist_now;
                let e_next = dist_next * dist_next;
                let realized = e_now - e_next;
                let required = lambda * (S::one() - lambda) * step_sq
                    - real::<S>(tol::BOUND_SLACK) * (S::one() + e_now);
                if realized < required {
                    return Err(Error::ErrorBoundViolation {
                        k,
                        lhs: approx_f64(realized),
                        rhs: approx_f64(required),
                    });
                }
            }
        }

        x = x_next;
        k += 1;
    }

    Ok(SolveOutcome {
        point: x,
        trace: IterationTrace {
            rows,
            terminal_status,
        },
    })
}

/// The two per-iteration lower-bound coefficients on the error decrease
/// `e_k - e_{k+1}` for a step of squared norm `s^2`:
///
/// * from the sQNE analysis of the averaged operator:
///   `lambda (1 - lambda) * s^2`;
/// * from the cutter-based analysis of cyclic projections over `m` sets:
///   `lambda (2 - lambda) / (4 m^2) * s^2`.
///
/// Returned as `(sqne_coefficient, cutter_coefficient)`.
pub fn bound_coefficients<S: Scalar>(lambda: S, m: usize) -> (S, S) {
    let two = real::<S>(2.0);
    let four = real::<S>(4.0);
    let m_s = real::<S>(m as f64);
    let sqne = lambda * (S::one() - lambda);
    let cutter = lambda * (two - lambda) / (four * m_s * m_s);
    (sqne, cutter)
}

/// One row of a bound-comparison report.
#[derive(Clone, Debug)]
pub struct BoundRow<S: Scalar> {
    pub k: usize,
    /// `e_k = ||x_k - z||^2`.
    pub error_sq: S,
    /// Realized decrease `e_k - e_{k+1}`.
    pub realized_decrease: S,
    /// `lambda_k (1 - lambda_k) ||T(x_k)-x_k||^2`.
    pub sqne_bound: S,
    /// `lambda_k (2 - lambda_k) / (4 m^2) ||T(x_k)-x_k||^2`.
    pub cutter_bound: S,
}

/// Realized error decreases against both lower bounds, per iteration.
#[derive(Clone, Debug)]
pub struct BoundComparisonReport<S: Scalar> {
    /// Number of sets in the cutter-based bound's cyclic scheme.
    pub m: usize,
    pub rows: Vec<BoundRow<S>>,
}

impl<S: Scalar> BoundComparisonReport<S> {
    /// Realized decrease at least the sQNE bound (up to scale-aware slack)
    /// on every recorded step.
    pub fn sqne_bound_holds(&self) -> bool {
        self.rows.iter().all(|r| {
            r.realized_decrease
                >= r.sqne_bound - real::<S>(tol::BOUND_SLACK) * (S::one() + r.error_sq)
        })
    }

    /// Does the sQNE bound dominate the cutter-based bound on every step?
    ///
    /// This holds whenever `lambda <= (4m^2 - 2)/(4m^2 - 1)`; for `m = 1`
    /// and `lambda` above `2/3` the cutter bound is the larger one, so a
    /// `false` here is a statement about the bounds, not about the run.
    pub fn sqne_dominates_cutter(&self) -> bool {
        self.rows.iter().all(|r| r.sqne_bound >= r.cutter_bound)
    }
}

/// Compare realized error decreases along a trace against the two bounds.
///
/// The trace must carry the distance column (a reference solution was
/// known); `m >= 1` is the set count for the cutter-based coefficient.
pub fn compare_error_bounds<S: Scalar>(
    trace: &IterationTrace<S>,
    m: usize,
) -> Result<BoundComparisonReport<S>> {
    if m == 0 {
        return Err(Error::ConfigInvalid("set count m must be at least 1"));
    }
    let mut rows = Vec::new();
    for pair in trace.rows.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let (d0, d1) = match (cur.distance, next.distance) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::MissingDistance),
        };
        let e0 = d0 * d0;
        let e1 = d1 * d1;
        let s_sq = cur.step_norm * cur.step_norm;
        let (c_sqne, c_cutter) = bound_coefficients(cur.lambda, m);
        rows.push(BoundRow {
            k: cur.k,
            error_sq: e0,
            realized_decrease: e0 - e1,
            sqne_bound: c_sqne * s_sq,
            cutter_bound: c_cutter * s_sq,
        });
    }
    Ok(BoundComparisonReport { m, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorHandle;

    fn two_halfspace_pool() -> Vec<OperatorHandle<f64>> {
        vec![
            OperatorHandle::halfspace_projection(vec![1.0, 0.0], 0.0).unwrap(),
            OperatorHandle::halfspace_projection(vec![0.0, 1.0], 0.0).unwrap(),
        ]
    }

    fn quadrant_violation(x: &[f64]) -> f64 {
        x.iter().fold(0.0_f64, |acc, &v| acc.max(v))
    }

    #[test]
    fn plan_validation_catches_structural_errors() {
        assert!(matches!(
            StringPlan::<f64>::new(vec![], vec![], 2),
            Err(Error::ConfigInvalid(_))
        ));
        assert!(matches!(
            StringPlan::<f64>::new(vec![vec![0], vec![]], vec![0.5, 0.5], 2),
            Err(Error::EmptyString { string: 1 })
        ));
        assert!(matches!(
            StringPlan::<f64>::new(vec![vec![0], vec![2]], vec![0.5, 0.5], 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        // operator 1 never used
        assert!(matches!(
            StringPlan::<f64>::new(vec![vec![0], vec![0]], vec![0.5, 0.5], 2),
            Err(Error::CoverageGap { index: 1 })
        ));
        assert!(matches!(
            StringPlan::<f64>::new(vec![vec![0], vec![1]], vec![0.5, -0.5], 2),
            Err(Error::WeightNotPositive { index: 1, .. })
        ));
    }

    #[test]
    fn plan_normalizes_weights() {
        let plan = StringPlan::<f64>::new(vec![vec![0], vec![1]], vec![2.0, 6.0], 2).unwrap();
        assert_eq!(plan.weights(), &[0.25, 0.75]);
        let sum: f64 = plan.weights().iter().sum();
        assert!((sum - 1.0).abs() <= tol::WEIGHT_SUM_TOL);
    }

    #[test]
    fn evaluate_strings_matches_hand_projections() {
        let pool = two_halfspace_pool();
        // Two singleton strings, equal weights.
        let plan = StringPlan::singletons(2).unwrap();
        let avg = AveragedOperator::new(pool.clone(), plan).unwrap();
        let eval = avg.evaluate_strings(&[2.0, 2.0]).unwrap();
        assert_eq!(eval.string_points[0], vec![0.0, 2.0]);
        assert_eq!(eval.string_points[1], vec![2.0, 0.0]);
        assert_eq!(eval.averaged, vec![1.0, 1.0]);

        // One string composing both projections: P2(P1(x)) = (0,0).
        let seq = AveragedOperator::new(pool, StringPlan::sequential(2).unwrap()).unwrap();
        let eval = seq.evaluate_strings(&[2.0, 2.0]).unwrap();
        assert_eq!(eval.string_points[0], vec![0.0, 0.0]);
        assert_eq!(eval.averaged, vec![0.0, 0.0]);
    }

    #[test]
    fn single_string_sigma_is_exactly_one() {
        let pool = vec![OperatorHandle::<f64>::halfspace_projection(vec![1.0, 0.0], 0.0).unwrap()];
        let avg = AveragedOperator::new(pool, StringPlan::sequential(1).unwrap()).unwrap();
        let x = [3.7, -1.2];
        let eval = avg.evaluate_strings(&x).unwrap();
        let sigma = avg
            .sigma_max(&x, &eval, tol::DEFAULT_FIXED_POINT_GUARD)
            .unwrap();
        assert_eq!(sigma, 1.0);
    }

    #[test]
    fn sigma_at_near_fixed_points_uses_the_convention() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let x = [-1.0, -1.0]; // feasible: both projections fix it
        let eval = avg.evaluate_strings(&x).unwrap();
        let sigma = avg
            .sigma_max(&x, &eval, tol::DEFAULT_FIXED_POINT_GUARD)
            .unwrap();
        assert_eq!(sigma, 1.0);
    }

    #[test]
    fn two_projection_sigma_is_exactly_two() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let x = [2.0, 2.0];
        let eval = avg.evaluate_strings(&x).unwrap();
        // numerator 0.5*4 + 0.5*4 = 4, denominator ||(1,1)-(2,2)||^2 = 2
        let sigma = avg
            .sigma_max(&x, &eval, tol::DEFAULT_FIXED_POINT_GUARD)
            .unwrap();
        assert_eq!(sigma, 2.0);
    }

    #[test]
    fn driver_extrapolation_solves_two_halfspaces_in_one_step() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let ctx = ProblemContext::new(quadrant_violation).with_reference(vec![0.0, 0.0]);
        let cfg = SolverConfig::<f64> {
            assert_fejer: true,
            ..SolverConfig::default()
        };
        let out = iterate(&avg, &[2.0, 2.0], &cfg, &ctx).unwrap();
        assert_eq!(out.point, vec![0.0, 0.0]);
        assert_eq!(out.trace.terminal_status, TerminalStatus::FeasibilityReached);
        assert_eq!(out.trace.iterations(), 1);
        assert_eq!(out.trace.rows[0].sigma, 2.0);

        // Without extrapolation the same step only reaches (1,1).
        let cfg_plain = SolverConfig::<f64> {
            step_mode: StepMode::Constant(1.0),
            max_iters: 1,
            ..SolverConfig::default()
        };
        let avg2 = AveragedOperator::new(two_halfspace_pool(), StringPlan::singletons(2).unwrap())
            .unwrap();
        let out2 = iterate(&avg2, &[2.0, 2.0], &cfg_plain, &ctx).unwrap();
        assert_eq!(out2.point, vec![1.0, 1.0]);
        assert_eq!(out2.trace.terminal_status, TerminalStatus::MaxIters);
        assert!(out2.trace.final_row().unwrap().violation > 0.0);
    }

    #[test]
    fn driver_single_projection_terminates_at_one() {
        let pool = vec![OperatorHandle::<f64>::halfspace_projection(vec![1.0, 0.0], 0.0).unwrap()];
        let avg = AveragedOperator::new(pool, StringPlan::sequential(1).unwrap()).unwrap();
        let ctx = ProblemContext::new(|x: &[f64]| x[0].max(0.0));
        let out = iterate(&avg, &[2.0, 1.0], &SolverConfig::default(), &ctx).unwrap();
        assert_eq!(out.trace.iterations(), 1);
        assert_eq!(out.trace.terminal_status, TerminalStatus::FeasibilityReached);
        assert_eq!(out.point, vec![0.0, 1.0]);
    }

    #[test]
    fn driver_feasible_start_terminates_at_zero() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let ctx = ProblemContext::new(quadrant_violation);
        let out = iterate(&avg, &[-1.0, -2.0], &SolverConfig::default(), &ctx).unwrap();
        assert_eq!(out.trace.iterations(), 0);
        assert_eq!(out.trace.terminal_status, TerminalStatus::FeasibilityReached);
        assert_eq!(out.trace.rows.len(), 1);
    }

    #[test]
    fn guard_triggers_consistently() {
        // T(x) = x/2 converges to 0 but the violation measure never reaches
        // the (unreachable) tolerance, so the guard must fire, and at the
        // final state the squared step must actually be below the guard.
        let pool = vec![OperatorHandle::<f64>::scaling(1, 0.5).unwrap()];
        let avg = AveragedOperator::new(pool, StringPlan::sequential(1).unwrap()).unwrap();
        let ctx = ProblemContext::new(|_: &[f64]| 1.0);
        let cfg = SolverConfig::<f64> {
            feasibility_tol: 0.5,
            ..SolverConfig::default()
        };
        let out = iterate(&avg, &[1.0], &cfg, &ctx).unwrap();
        assert_eq!(out.trace.terminal_status, TerminalStatus::GuardTriggered);
        let final_step = out.trace.final_row().unwrap().step_norm;
        assert!(final_step * final_step <= cfg.fixed_point_guard);
    }

    #[test]
    fn epsilon_band_is_enforced_when_requested() {
        let cfg = SolverConfig::<f64> {
            epsilon: Some(0.1),
            lambda: LambdaSchedule::Constant(1.0),
            ..SolverConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::ScheduleOutsideBand { .. })
        ));
        let ok = SolverConfig::<f64> {
            epsilon: Some(0.1),
            lambda: LambdaSchedule::Constant(0.5),
            ..SolverConfig::default()
        };
        assert!(ok.validate().is_ok());
        assert!(matches!(
            SolverConfig::<f64> {
                epsilon: Some(0.7),
                ..SolverConfig::default()
            }
            .validate(),
            Err(Error::EpsilonOutOfRange(_))
        ));
    }

    #[test]
    fn schedule_values_validated_and_extended() {
        let seq = LambdaSchedule::Sequence(vec![0.5, 1.0, 1.5]);
        assert_eq!(seq.value_at(0), 0.5);
        assert_eq!(seq.value_at(2), 1.5);
        assert_eq!(seq.value_at(100), 1.5);
        let cfg = SolverConfig::<f64> {
            lambda: LambdaSchedule::Sequence(vec![0.5, 2.0]),
            ..SolverConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::ScheduleOutOfRange { k: 1, .. })
        ));
    }

    #[test]
    fn assertions_require_a_reference() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let ctx = ProblemContext::new(quadrant_violation);
        let cfg = SolverConfig::<f64> {
            assert_fejer: true,
            ..SolverConfig::default()
        };
        assert!(matches!(
            iterate(&avg, &[2.0, 2.0], &cfg, &ctx),
            Err(Error::MissingReference)
        ));
    }

    #[test]
    fn bound_coefficients_match_hand_values() {
        // lambda = 1/2, m = 4: 0.25 vs 0.75/64; ratio 64/3.
        let (sqne, cutter) = bound_coefficients(0.5_f64, 4);
        assert!((sqne - 0.25).abs() < 1e-15);
        assert!((cutter - 0.75 / 64.0).abs() < 1e-15);
        assert!((sqne / cutter - 64.0 / 3.0).abs() < 1e-12);
        // lambda = 1/2, m = 1: 0.25 vs 0.1875 — still dominated.
        let (sqne1, cutter1) = bound_coefficients(0.5_f64, 1);
        assert!((sqne1 - 0.25).abs() < 1e-15);
        assert!((cutter1 - 0.1875).abs() < 1e-15);
        assert!(sqne1 > cutter1);
    }

    #[test]
    fn error_bound_report_on_a_real_run() {
        // lambda = 0.5 on the two-halfspace problem with z = 0: the sQNE
        // bound must hold on every step and dominate the cutter bound
        // (m = 2, lambda = 1/2 is inside the dominance region).
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let ctx = ProblemContext::new(quadrant_violation).with_reference(vec![0.0, 0.0]);
        let cfg = SolverConfig::<f64> {
            lambda: LambdaSchedule::Constant(0.5),
            assert_fejer: true,
            assert_error_bound: true,
            feasibility_tol: 1e-6,
            ..SolverConfig::default()
        };
        let out = iterate(&avg, &[2.0, 2.0], &cfg, &ctx).unwrap();
        let report = compare_error_bounds(&out.trace, 2).unwrap();
        assert!(!report.rows.is_empty());
        assert!(report.sqne_bound_holds());
        assert!(report.sqne_dominates_cutter());
    }

    #[test]
    fn bound_comparison_needs_distances() {
        let pool = two_halfspace_pool();
        let avg = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
        let ctx = ProblemContext::new(quadrant_violation); // no reference
        let cfg = SolverConfig::<f64> {
            max_iters: 3,
            feasibility_tol: 1e-12,
            ..SolverConfig::default()
        };
        let out = iterate(&avg, &[2.0, 2.0], &cfg, &ctx).unwrap();
        assert!(matches!(
            compare_error_bounds(&out.trace, 2),
            Err(Error::MissingDistance)
        ));
    }

    #[test]
    fn iterations_to_tolerance_scans_the_trace() {
        let pool = vec![OperatorHandle::<f64>::halfspace_projection(vec![1.0], 0.0).unwrap()];
        let avg = AveragedOperator::new(pool, StringPlan::sequential(1).unwrap()).unwrap();
        let ctx = ProblemContext::new(|x: &[f64]| x[0].max(0.0));
        let cfg = SolverConfig::<f64> {
            // lambda 0.5 halves the distance each iteration: 4, 2, 1, ...
            lambda: LambdaSchedule::Constant(0.5),
            feasibility_tol: 0.3,
            ..SolverConfig::default()
        };
        let out = iterate(&avg, &[4.0], &cfg, &ctx).unwrap();
        // violations: 4, 2, 1, 0.5, 0.25 -> tol 0.3 first met at k = 4
        assert_eq!(out.trace.iterations_to_tolerance(0.3), Some(4));
        assert_eq!(out.trace.iterations_to_tolerance(2.5), Some(1));
        assert_eq!(out.trace.iterations_to_tolerance(1e-9), None);
    }
}
