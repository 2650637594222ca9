//! Numeric tolerances shared across the toolkit, collected in one place so
//! every threshold has a name, a default, and a rationale.
//!
//! All constants are `f64`; generic code converts them with [`crate::real`].

/// Slack below the theoretical lower bound `sigma_max >= 1`.
///
/// The extrapolation factor is a ratio of two sums of squared norms that are
/// exactly equal in the single-string case and strictly ordered otherwise;
/// anything below `1 - SIGMA_UNITY_SLACK` indicates a real defect, not
/// rounding, and is treated as a hard error.
pub const SIGMA_UNITY_SLACK: f64 = 1e-10;

/// Same mechanism, same slack: the optimal parallel-subgradient step
/// `mu_t >= 1` whenever at least one block member is violated.
pub const MU_UNITY_SLACK: f64 = 1e-10;

/// Additive slack for the Fejér monotonicity assertion
/// `||x_{k+1} - z|| <= ||x_k - z|| + FEJER_SLACK * (1 + ||z||)`.
pub const FEJER_SLACK: f64 = 1e-9;

/// Additive slack for the per-iteration error-decrease bound
/// `e_k - e_{k+1} >= lambda(1-lambda)||T(x_k)-x_k||^2 - BOUND_SLACK * (1 + e_k)`.
pub const BOUND_SLACK: f64 = 1e-9;

/// Default fixed-point guard: iteration stops when the *squared* step norm
/// `||T(x_k) - x_k||^2` falls below this. Compared against the squared norm,
/// not the norm.
pub const DEFAULT_FIXED_POINT_GUARD: f64 = 1e-10;

/// Scale factor for the default fixed-set membership test
/// `||T(x) - x|| <= FIX_TEST_SCALE * (1 + ||x||)`, used when an operator
/// carries no bespoke `fix_test`.
pub const FIX_TEST_SCALE: f64 = 1e-12;

/// Absolute tolerance on constraint values for the fixed-set membership test
/// of subgradient projection operators: `g(x) <= SUBGRAD_FIX_TOL` counts as
/// inside `{g <= 0}`. Keeps exactly-feasible anchor points (where `g` is
/// constructed to vanish) inside the set despite rounding.
pub const SUBGRAD_FIX_TOL: f64 = 1e-9;

/// Scale factor for the linear block operator's fixed-set test:
/// `||b_t - A_t x|| <= LINEAR_FIX_SCALE * (1 + ||b_t||)`.
pub const LINEAR_FIX_SCALE: f64 = 1e-10;

/// Weight vectors are normalized on construction; afterwards the sum must
/// sit within this distance of 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default scale-aware tolerance for property-certificate checks
/// (QNE / sQNE / cutter margins).
pub const PROPERTY_CHECK_TOL: f64 = 1e-8;

/// Power iteration: relative Rayleigh-quotient tolerance and iteration cap.
pub const POWER_ITER_REL_TOL: f64 = 1e-8;
pub const POWER_ITER_CAP: usize = 5000;

/// Safety inflation applied to the power-iteration estimate before it is
/// used to bound a relaxation parameter (the estimate approaches the true
/// spectral radius from below).
pub const SPECTRAL_INFLATION: f64 = 1.01;
