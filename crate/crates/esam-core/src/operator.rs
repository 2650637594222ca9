//! Operator handles, relaxation, and property certificates.
//!
//! An [`OperatorHandle`] packages a map `T: R^n -> R^n` together with what a
//! feasibility solver needs to know about it: its dimension, an optional
//! membership test for its fixed-point set `Fix T`, and (when known) a
//! reference fixed point. The handle is the unit of composition — string
//! plans, linear block steps and subgradient projections all plug in here.
//!
//! Two relaxations are provided:
//!
//! * [`relax`]: the convex combination `(1-alpha) Id + alpha T` for
//!   `alpha` in `(0, 1]`. If `T` is sQNE, so is the relaxation, and the
//!   fixed-point set is unchanged.
//! * [`generalized_relax`]: `x + lambda * sigma(x) * (T(x) - x)` with
//!   `lambda` in `[0, 2]` and a point-dependent step size `sigma(x) > 0`.
//!   Values `lambda * sigma(x) > 1` *extrapolate* past `T(x)`; this is the
//!   mechanism the string-averaging driver exploits. For `lambda != 0` the
//!   fixed points are exactly those of `T`.
//!
//! [`check_property`] turns the operator-class definitions (quasi-
//! nonexpansive, strictly quasi-nonexpansive, cutter) into sampling-based
//! certificates. These are spot checks, not proofs: a passing report says
//! "no violation found on these samples", and a failing report carries the
//! offending pair and its margin so the failure is reproducible.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{approx_f64, real, Scalar};
use crate::tol;
use crate::vecops as vo;

/// Evaluation closure: total on finite inputs of the right dimension, but
/// allowed to fail (e.g. an inconsistent oracle or a degenerate block).
pub type EvalFn<S> = dyn Fn(&[S]) -> Result<Vec<S>> + Send + Sync;
/// Fixed-set membership test.
pub type FixTestFn<S> = dyn Fn(&[S]) -> bool + Send + Sync;
/// Point-dependent step-size function `sigma`.
pub type StepSizeFn<S> = dyn Fn(&[S]) -> S + Send + Sync;

/// A map `R^n -> R^n` with optional fixed-set metadata.
///
/// Handles are immutable after construction and cheap to clone (the closure
/// is shared); evaluation is reentrant.
#[derive(Clone)]
pub struct OperatorHandle<S: Scalar> {
    dim: usize,
    eval: Arc<EvalFn<S>>,
    fix_test: Option<Arc<FixTestFn<S>>>,
    reference_fixed_point: Option<Vec<S>>,
}

impl<S: Scalar> OperatorHandle<S> {
    /// Wrap a fallible evaluation closure.
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&[S]) -> Result<Vec<S>> + Send + Sync + 'static,
    {
        OperatorHandle {
            dim,
            eval: Arc::new(eval),
            fix_test: None,
            reference_fixed_point: None,
        }
    }

    /// Wrap an infallible map.
    pub fn from_map<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
    {
        Self::new(dim, move |x| Ok(f(x)))
    }

    /// Attach a bespoke fixed-set membership test.
    pub fn with_fix_test<F>(mut self, test: F) -> Self
    where
        F: Fn(&[S]) -> bool + Send + Sync + 'static,
    {
        self.fix_test = Some(Arc::new(test));
        self
    }

    /// Attach a known fixed point (must match the dimension and be finite).
    pub fn with_reference_fixed_point(mut self, z: Vec<S>) -> Result<Self> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        if !vo::all_finite(&z) {
            return Err(Error::NonFinite {
                context: "reference fixed point".into(),
            });
        }
        self.reference_fixed_point = Some(z);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reference_fixed_point(&self) -> Option<&[S]> {
        self.reference_fixed_point.as_deref()
    }

    /// Evaluate `T(x)`, validating dimensions and finiteness of the output.
    pub fn apply(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let y = (self.eval)(x)?;
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if !vo::all_finite(&y) {
            return Err(Error::NonFinite {
                context: "operator output".into(),
            });
        }
        Ok(y)
    }

    /// Membership test for `Fix T`.
    ///
    /// Uses the attached `fix_test` when present; otherwise falls back to the
    /// scale-aware step criterion
    /// `||T(x) - x|| <= FIX_TEST_SCALE * (1 + ||x||)`.
    pub fn is_fixed(&self, x: &[S]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(test) = &self.fix_test {
            return Ok(test(x));
        }
        let y = self.apply(x)?;
        let step = vo::distance(&y, x);
        Ok(step <= real::<S>(tol::FIX_TEST_SCALE) * (S::one() + vo::norm(x)))
    }

    // --- stock operators used across the test problems -------------------

    /// The identity on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        OperatorHandle::from_map(dim, |x: &[S]| x.to_vec()).with_fix_test(|_| true)
    }

    /// `T(x) = c * x`. For `|c| < 1` this is paracontracting with fixed
    /// point 0; `c = -1/2` is the classic example of an sQNE operator that
    /// is *not* a cutter, used as a negative test for the cutter check.
    pub fn scaling(dim: usize, c: S) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite {
                context: "scaling factor".into(),
            });
        }
        let op = OperatorHandle::from_map(dim, move |x: &[S]| {
            x.iter().map(|&v| c * v).collect()
        })
        .with_fix_test(move |x: &[S]| {
            vo::norm(x) <= real::<S>(tol::FIX_TEST_SCALE)
        });
        op.with_reference_fixed_point(vec![S::zero(); dim])
    }

    /// Metric projection onto the halfspace `{x : <a, x> <= beta}`:
    /// `P(x) = x - (<a,x> - beta)^+ / ||a||^2 * a`.
    pub fn halfspace_projection(a: Vec<S>, beta: S) -> Result<Self> {
        let nsq = vo::norm_sq(&a);
        if !(nsq.is_finite() && nsq > S::zero()) {
            return Err(Error::ZeroRow { row: 0 });
        }
        if !beta.is_finite() {
            return Err(Error::NonFinite {
                context: "halfspace offset".into(),
            });
        }
        let dim = a.len();
        // <a, z> = beta exactly characterizes the nearest boundary point
        // z = (beta/||a||^2) a, a convenient reference.
        let z: Vec<S> = a.iter().map(|&ai| ai * beta / nsq).collect();
        let a_test = a.clone();
        let slack = real::<S>(tol::SUBGRAD_FIX_TOL);
        let op = OperatorHandle::from_map(dim, move |x: &[S]| {
            let excess = vo::dot(&a, x) - beta;
            if excess > S::zero() {
                let coef = -excess / nsq;
                vo::affine_step(x, coef, &a)
            } else {
                x.to_vec()
            }
        })
        .with_fix_test(move |x: &[S]| vo::dot(&a_test, x) - beta <= slack);
        op.with_reference_fixed_point(z)
    }

    /// Metric projection onto the closed ball `B(center, radius)`.
    pub fn ball_projection(center: Vec<S>, radius: S) -> Result<Self> {
        if !(radius.is_finite() && radius > S::zero()) {
            return Err(Error::NonFinite {
                context: "ball radius".into(),
            });
        }
        if !vo::all_finite(&center) {
            return Err(Error::NonFinite {
                context: "ball center".into(),
            });
        }
        let dim = center.len();
        let c_eval = center.clone();
        let c_test = center.clone();
        let rel = S::one() + real::<S>(tol::FIX_TEST_SCALE);
        let op = OperatorHandle::from_map(dim, move |x: &[S]| {
            let d = vo::distance(x, &c_eval);
            if d <= radius {
                x.to_vec()
            } else {
                let t = radius / d;
                x.iter()
                    .zip(&c_eval)
                    .map(|(&xi, &ci)| ci + t * (xi - ci))
                    .collect()
            }
        })
        .with_fix_test(move |x: &[S]| vo::distance(x, &c_test) <= radius * rel);
        op.with_reference_fixed_point(center)
    }
}

/// Convex relaxation `(1-alpha) Id + alpha T`, `alpha` in `(0, 1]`.
///
/// Fixed points are preserved, and so is strict quasi-nonexpansiveness: the
/// relaxed step is the original step scaled by `alpha`.
pub fn relax<S: Scalar>(op: &OperatorHandle<S>, alpha: S) -> Result<OperatorHandle<S>> {
    if !(alpha.is_finite() && alpha > S::zero() && alpha <= S::one()) {
        return Err(Error::AlphaOutOfRange(approx_f64(alpha)));
    }
    let spec = RelaxationSpec::constant(alpha, S::one())?;
    generalized_relax(op, spec)
}

/// How the step-size factor `sigma(x)` of a generalized relaxation is
/// obtained.
#[derive(Clone)]
pub enum StepRule<S: Scalar> {
    /// `sigma(x) = c` for a fixed positive `c`.
    Constant(S),
    /// Arbitrary point-dependent step size; values must be positive and
    /// finite at every queried point (checked per evaluation).
    PointDependent(Arc<StepSizeFn<S>>),
}

impl<S: Scalar> StepRule<S> {
    fn value_at(&self, x: &[S]) -> Result<S> {
        let sigma = match self {
            StepRule::Constant(c) => *c,
            StepRule::PointDependent(f) => f(x),
        };
        if !(sigma.is_finite() && sigma > S::zero()) {
            return Err(Error::SigmaNotPositive(approx_f64(sigma)));
        }
        Ok(sigma)
    }
}

/// Parameters of the generalized relaxation
/// `T_{sigma,lambda}(x) = x + lambda * sigma(x) * (T(x) - x)`.
#[derive(Clone)]
pub struct RelaxationSpec<S: Scalar> {
    pub lambda: S,
    pub step: StepRule<S>,
}

impl<S: Scalar> RelaxationSpec<S> {
    /// Constant step size; validates `lambda` in `[0, 2]` and `sigma > 0`.
    pub fn constant(lambda: S, sigma: S) -> Result<Self> {
        let spec = RelaxationSpec {
            lambda,
            step: StepRule::Constant(sigma),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Point-dependent step size; `sigma(x)` is validated at each call.
    pub fn point_dependent<F>(lambda: S, sigma: F) -> Result<Self>
    where
        F: Fn(&[S]) -> S + Send + Sync + 'static,
    {
        let spec = RelaxationSpec {
            lambda,
            step: StepRule::PointDependent(Arc::new(sigma)),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite()
            && self.lambda >= S::zero()
            && self.lambda <= real::<S>(2.0))
        {
            return Err(Error::LambdaOutOfRange(approx_f64(self.lambda)));
        }
        if let StepRule::Constant(c) = &self.step {
            if !(c.is_finite() && *c > S::zero()) {
                return Err(Error::SigmaNotPositive(approx_f64(*c)));
            }
        }
        Ok(())
    }
}

/// Generalized relaxation of `op` by `spec`.
///
/// For `lambda != 0` the returned operator has exactly the fixed points of
/// `op`, so the fixed-set metadata is carried over; for `lambda = 0` the
/// result is the identity (every point fixed) and the metadata is replaced
/// accordingly.
pub fn generalized_relax<S: Scalar>(
    op: &OperatorHandle<S>,
    spec: RelaxationSpec<S>,
) -> Result<OperatorHandle<S>> {
    spec.validate()?;
    let inner = op.clone();
    let lambda = spec.lambda;
    let step = spec.step;
    let relaxed = OperatorHandle::new(op.dim(), move |x: &[S]| {
        let sigma = step.value_at(x)?;
        let y = inner.apply(x)?;
        let coef = lambda * sigma;
        Ok(x.iter()
            .zip(&y)
            .map(|(&xi, &yi)| xi + coef * (yi - xi))
            .collect())
    });
    if lambda == S::zero() {
        return Ok(relaxed.with_fix_test(|_| true));
    }
    let mut relaxed = match &op.fix_test {
        Some(test) => {
            let test = Arc::clone(test);
            relaxed.with_fix_test(move |x: &[S]| test(x))
        }
        None => relaxed,
    };
    relaxed.reference_fixed_point = op.reference_fixed_point.clone();
    Ok(relaxed)
}

/// Operator classes testable by [`check_property`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorProperty {
    /// `||T(x) - z|| <= ||x - z||` for all `z` in `Fix T`.
    QuasiNonexpansive,
    /// Quasi-nonexpansive with strict inequality off the fixed set.
    StrictlyQuasiNonexpansive,
    /// `<x - T(x), z - T(x)> <= 0` for all `z` in `Fix T`.
    Cutter,
}

/// A sample pair that violated the property under test.
#[derive(Clone, Debug)]
pub struct PropertyViolation<S: Scalar> {
    /// Index into the sample list.
    pub sample: usize,
    /// Index into the fixed-point list.
    pub fixed_point: usize,
    /// How badly the defining inequality failed (positive = violation).
    pub margin: S,
}

/// Outcome of a sampling-based property certificate.
#[derive(Clone, Debug)]
pub struct PropertyCheckReport<S: Scalar> {
    pub property: OperatorProperty,
    pub checked_pairs: usize,
    pub violations: Vec<PropertyViolation<S>>,
    pub passed: bool,
}

/// Check an operator-class property on all `samples x fixed_points` pairs.
///
/// Every claimed fixed point is validated against the operator's fixed-set
/// test first (`Error::NotAFixedPoint` otherwise) — a property certificate
/// against a bogus `z` would be meaningless.
///
/// Margins and tolerances:
///
/// * QNE: violation when `||T(x)-z|| - ||x-z|| > tol`.
/// * sQNE: a sample counts as *off* the fixed set when
///   `||T(x)-x|| > tol * (1 + ||x||)` (strict inequalities are not testable
///   at machine precision); for those, strictness requires a decrease of at
///   least `tol`, i.e. violation when `||T(x)-z|| - ||x-z|| > -tol`.
///   On-set samples are held to the plain QNE inequality.
/// * Cutter: violation when `<x - T(x), z - T(x)> > tol`.
pub fn check_property<S: Scalar>(
    op: &OperatorHandle<S>,
    property: OperatorProperty,
    samples: &[Vec<S>],
    fixed_points: &[Vec<S>],
    tol: S,
) -> Result<PropertyCheckReport<S>> {
    for (j, z) in fixed_points.iter().enumerate() {
        if !op.is_fixed(z)? {
            return Err(Error::NotAFixedPoint { index: j });
        }
    }
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for (i, x) in samples.iter().enumerate() {
        let y = op.apply(x)?;
        let step = vo::distance(&y, x);
        let off_set = step > tol * (S::one() + vo::norm(x));
        for (j, z) in fixed_points.iter().enumerate() {
            checked += 1;
            let margin = match property {
                OperatorProperty::QuasiNonexpansive => {
                    vo::distance(&y, z) - vo::distance(x, z)
                }
                OperatorProperty::StrictlyQuasiNonexpansive => {
                    vo::distance(&y, z) - vo::distance(x, z)
                }
                OperatorProperty::Cutter => {
                    let xy = vo::sub(x, &y);
                    let zy = vo::sub(z, &y);
                    vo::dot(&xy, &zy)
                }
            };
            let violated = match property {
                OperatorProperty::QuasiNonexpansive | OperatorProperty::Cutter => margin > tol,
                OperatorProperty::StrictlyQuasiNonexpansive => {
                    if off_set {
                        margin > -tol
                    } else {
                        margin > tol
                    }
                }
            };
            if violated {
                violations.push(PropertyViolation {
                    sample: i,
                    fixed_point: j,
                    margin,
                });
            }
        }
    }
    Ok(PropertyCheckReport {
        property,
        checked_pairs: checked,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfspace_x1() -> OperatorHandle<f64> {
        // {x : x_1 <= 0} in R^2
        OperatorHandle::halfspace_projection(vec![1.0, 0.0], 0.0).unwrap()
    }

    #[test]
    fn halfspace_projection_matches_hand_values() {
        let p = halfspace_x1();
        assert_eq!(p.apply(&[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.apply(&[-1.0, 3.0]).unwrap(), vec![-1.0, 3.0]);
        assert!(p.is_fixed(&[-1.0, 3.0]).unwrap());
        assert!(!p.is_fixed(&[2.0, 0.0]).unwrap());
    }

    #[test]
    fn ball_projection_matches_hand_values() {
        let p = OperatorHandle::ball_projection(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(p.apply(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(p.apply(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn relax_halves_the_projection_step() {
        // alpha = 1/2 on the halfspace projection: (2,0) moves to (1,0).
        let p = halfspace_x1();
        let r = relax(&p, 0.5).unwrap();
        assert_eq!(r.apply(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        // alpha = 1 returns the original values.
        let r1 = relax(&p, 1.0).unwrap();
        assert_eq!(r1.apply(&[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn relax_scaling_example() {
        // T(x) = -x/2, alpha = 1/2: at x = 1 the relaxation gives
        // (1-1/2)*1 + (1/2)*(-1/2) = 0.25.
        let t = OperatorHandle::scaling(1, -0.5).unwrap();
        let r = relax(&t, 0.5).unwrap();
        assert_eq!(r.apply(&[1.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn relax_rejects_out_of_range_alpha() {
        let p = halfspace_x1();
        assert!(matches!(relax(&p, 0.0), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(relax(&p, 1.2), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(relax(&p, -0.3), Err(Error::AlphaOutOfRange(_))));
    }

    #[test]
    fn generalized_relax_identity_and_extrapolation() {
        let p = halfspace_x1();
        // lambda = 1, sigma = 1 reproduces T.
        let same = generalized_relax(&p, RelaxationSpec::constant(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(same.apply(&[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // lambda = 0 is the identity.
        let id = generalized_relax(&p, RelaxationSpec::constant(0.0, 7.0).unwrap()).unwrap();
        assert_eq!(id.apply(&[2.0, 5.0]).unwrap(), vec![2.0, 5.0]);
        assert!(id.is_fixed(&[2.0, 5.0]).unwrap());
        // lambda = 1, sigma = 2 doubles the step: (2,0) lands at (-2,0).
        let over = generalized_relax(&p, RelaxationSpec::constant(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(over.apply(&[2.0, 0.0]).unwrap(), vec![-2.0, 0.0]);
    }

    #[test]
    fn generalized_relax_rejects_bad_parameters() {
        let p = halfspace_x1();
        assert!(matches!(
            RelaxationSpec::<f64>::constant(2.5, 1.0),
            Err(Error::LambdaOutOfRange(_))
        ));
        assert!(matches!(
            RelaxationSpec::<f64>::constant(1.0, 0.0),
            Err(Error::SigmaNotPositive(_))
        ));
        // A point-dependent sigma that goes non-positive fails at evaluation.
        let spec = RelaxationSpec::point_dependent(1.0, |x: &[f64]| x[0]).unwrap();
        let op = generalized_relax(&p, spec).unwrap();
        assert!(op.apply(&[2.0, 0.0]).is_ok());
        assert!(matches!(
            op.apply(&[-1.0, 0.0]),
            Err(Error::SigmaNotPositive(_))
        ));
    }

    #[test]
    fn generalized_relax_preserves_fixed_points() {
        let p = halfspace_x1();
        let spec = RelaxationSpec::constant(1.5, 1.3).unwrap();
        let op = generalized_relax(&p, spec).unwrap();
        let z = [-2.0, 1.0];
        assert_eq!(op.apply(&z).unwrap(), z.to_vec());
        assert!(op.is_fixed(&z).unwrap());
        assert_eq!(op.reference_fixed_point().unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn qne_certificate_passes_for_projections() {
        let p = halfspace_x1();
        let samples: Vec<Vec<f64>> = vec![
            vec![2.0, 0.0],
            vec![1.5, -3.0],
            vec![-0.5, 0.25],
            vec![10.0, 10.0],
        ];
        let zs: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![-1.0, 5.0]];
        let report = check_property(
            &p,
            OperatorProperty::QuasiNonexpansive,
            &samples,
            &zs,
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap();
        assert!(report.passed);
        assert_eq!(report.checked_pairs, 8);
    }

    #[test]
    fn sqne_certificate_passes_for_scaling() {
        let t = OperatorHandle::scaling(1, -0.5).unwrap();
        let samples = vec![vec![1.0], vec![-3.0], vec![0.7]];
        let zs = vec![vec![0.0]];
        let report = check_property(
            &t,
            OperatorProperty::StrictlyQuasiNonexpansive,
            &samples,
            &zs,
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap();
        assert!(report.passed);
    }

    #[test]
    fn cutter_check_rejects_the_scaling_counterexample() {
        // T(x) = -x/2 is sQNE but not a cutter: at x = 1, z = 0,
        // <x - T(x), z - T(x)> = (3/2) * (1/2) = 3/4 > 0.
        let t = OperatorHandle::scaling(1, -0.5).unwrap();
        let report = check_property(
            &t,
            OperatorProperty::Cutter,
            &[vec![1.0]],
            &[vec![0.0]],
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap();
        assert!(!report.passed);
        assert_eq!(report.violations.len(), 1);
        let margin = report.violations[0].margin;
        assert!((margin - 0.75).abs() < 1e-15, "margin = {margin}");
    }

    #[test]
    fn projections_are_cutters() {
        let p = halfspace_x1();
        let report = check_property(
            &p,
            OperatorProperty::Cutter,
            &[vec![2.0, 1.0], vec![5.0, -2.0]],
            &[vec![0.0, 0.0], vec![-3.0, 4.0]],
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap();
        assert!(report.passed);
    }

    #[test]
    fn check_property_rejects_bogus_fixed_points() {
        let p = halfspace_x1();
        let err = check_property(
            &p,
            OperatorProperty::QuasiNonexpansive,
            &[vec![2.0, 0.0]],
            &[vec![1.0, 0.0]], // violates x_1 <= 0
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotAFixedPoint { index: 0 }));
    }

    #[test]
    fn over_relaxation_past_two_breaks_qne() {
        // lambda * sigma = 3 on a halfspace projection: x = (1, 0) maps to
        // (-2, 0), which moves away from the fixed point 0. Negative test
        // for the relaxation-closure boundary.
        let p = halfspace_x1();
        let spec = RelaxationSpec::constant(2.0, 1.5).unwrap();
        let op = generalized_relax(&p, spec).unwrap();
        let report = check_property(
            &op,
            OperatorProperty::QuasiNonexpansive,
            &[vec![1.0, 0.0]],
            &[vec![0.0, 0.0]],
            tol::PROPERTY_CHECK_TOL,
        )
        .unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn apply_validates_dimensions_and_finiteness() {
        let p = halfspace_x1();
        assert!(matches!(
            p.apply(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let bad = OperatorHandle::from_map(1, |_x: &[f64]| vec![f64::NAN]);
        assert!(matches!(bad.apply(&[1.0]), Err(Error::NonFinite { .. })));
    }
}
