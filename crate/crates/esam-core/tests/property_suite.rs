//! Sampling-based certificates of the operator-class properties the whole
//! method rests on: projections are QNE cutters, relaxations stay sQNE,
//! generalized relaxations preserve fixed points, averaged operators are
//! QNE toward common feasible points, and the extrapolation factor never
//! dips below one.

use esam_core::operator::{
    check_property, generalized_relax, relax, OperatorHandle, OperatorProperty, RelaxationSpec,
};
use esam_core::strings::{AveragedOperator, StringPlan};
use esam_core::tol;
use esam_core::vecops;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, 3)
}

/// A halfspace `<a, x> <= beta` with a solidly nonzero normal.
fn halfspace() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (vec3(5.0), -3.0..3.0f64)
        .prop_filter("normal too small", |(a, _)| vecops::norm_sq(a) > 0.01)
}

fn gap(a: &[f64], beta: f64, x: &[f64]) -> f64 {
    vecops::dot(a, x) - beta
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// A halfspace projection satisfies both the QNE and the cutter
    /// inequality against any point of the halfspace.
    #[test]
    fn projection_is_qne_and_cutter(
        (a, beta) in halfspace(),
        x in vec3(10.0),
        witness in vec3(10.0),
    ) {
        let p = OperatorHandle::halfspace_projection(a, beta).unwrap();
        // Projecting an arbitrary point always lands inside the halfspace.
        let z = p.apply(&witness).unwrap();
        for property in [OperatorProperty::QuasiNonexpansive, OperatorProperty::Cutter] {
            let report = check_property(
                &p,
                property,
                &[x.clone()],
                &[z.clone()],
                tol::PROPERTY_CHECK_TOL,
            ).unwrap();
            prop_assert!(report.passed, "{property:?} violated: {:?}", report.violations);
        }
    }

    /// Under-relaxed projections `(1-alpha) Id + alpha P` are strictly QNE
    /// for any `alpha` in `(0, 1]`.
    #[test]
    fn relaxed_projection_is_strictly_qne(
        (a, beta) in halfspace(),
        alpha in 0.05..=1.0f64,
        x in vec3(10.0),
        witness in vec3(10.0),
    ) {
        // Keep the sample solidly on one side: points within a hair of the
        // boundary have decreases below any testable strictness margin.
        prop_assume!(gap(&a, beta, &x).abs() > 1e-3);
        let p = OperatorHandle::halfspace_projection(a, beta).unwrap();
        let z = p.apply(&witness).unwrap();
        let r = relax(&p, alpha).unwrap();
        let report = check_property(
            &r,
            OperatorProperty::StrictlyQuasiNonexpansive,
            &[x],
            &[z],
            tol::PROPERTY_CHECK_TOL,
        ).unwrap();
        prop_assert!(report.passed, "violations: {:?}", report.violations);
    }

    /// `relax(op, 1)` is the operator itself, bit for bit.
    #[test]
    fn full_relaxation_is_the_identity_transform(
        (a, beta) in halfspace(),
        x in vec3(10.0),
    ) {
        let p = OperatorHandle::halfspace_projection(a, beta).unwrap();
        let r = relax(&p, 1.0).unwrap();
        prop_assert_eq!(p.apply(&x).unwrap(), r.apply(&x).unwrap());
    }

    /// Generalized relaxation with any `lambda != 0` and positive step
    /// size keeps every fixed point fixed.
    #[test]
    fn generalized_relaxation_preserves_fixed_points(
        (a, beta) in halfspace(),
        lambda in 0.1..=1.9f64,
        sigma in 1.0..=3.0f64,
        witness in vec3(10.0),
    ) {
        let p = OperatorHandle::halfspace_projection(a, beta).unwrap();
        let z = p.apply(&witness).unwrap();
        let spec = RelaxationSpec::constant(lambda, sigma).unwrap();
        let t = generalized_relax(&p, spec).unwrap();
        let tz = t.apply(&z).unwrap();
        let drift = vecops::distance(&tz, &z);
        prop_assert!(
            drift <= 1e-12 * (1.0 + vecops::norm(&z)),
            "fixed point drifted by {drift}"
        );
    }

    /// The averaged string operator is QNE toward any point all pool
    /// members share.
    #[test]
    fn averaged_operator_is_qne_toward_common_points(
        normals in prop::collection::vec(vec3(5.0), 3),
        slacks in prop::collection::vec(0.0..2.0f64, 3),
        z0 in vec3(3.0),
        x in vec3(10.0),
        plan_choice in 0..3usize,
    ) {
        for a in &normals {
            prop_assume!(vecops::norm_sq(a) > 0.01);
        }
        // beta_i = <a_i, z0> + slack_i makes z0 feasible for every member.
        let pool: Vec<_> = normals
            .iter()
            .zip(&slacks)
            .map(|(a, s)| {
                OperatorHandle::halfspace_projection(a.clone(), vecops::dot(a, &z0) + s).unwrap()
            })
            .collect();
        let plan = match plan_choice {
            0 => StringPlan::singletons(3).unwrap(),
            1 => StringPlan::sequential(3).unwrap(),
            _ => StringPlan::uniform(vec![vec![0, 1], vec![1, 2]], 3).unwrap(),
        };
        let avg = AveragedOperator::new(pool, plan).unwrap();
        let tx = avg.apply(&x).unwrap();
        prop_assert!(
            vecops::distance(&tx, &z0) <= vecops::distance(&x, &z0) + 1e-9,
            "averaged step moved away from a common feasible point"
        );
    }

    /// The extrapolation factor is never below one, whatever the plan.
    #[test]
    fn sigma_max_never_below_one(
        normals in prop::collection::vec(vec3(5.0), 3),
        betas in prop::collection::vec(-3.0..3.0f64, 3),
        x in vec3(10.0),
        plan_choice in 0..3usize,
    ) {
        for a in &normals {
            prop_assume!(vecops::norm_sq(a) > 0.01);
        }
        let pool: Vec<_> = normals
            .iter()
            .zip(&betas)
            .map(|(a, &b)| OperatorHandle::halfspace_projection(a.clone(), b).unwrap())
            .collect();
        let plan = match plan_choice {
            0 => StringPlan::singletons(3).unwrap(),
            1 => StringPlan::sequential(3).unwrap(),
            _ => StringPlan::uniform(vec![vec![0, 1], vec![2, 0]], 3).unwrap(),
        };
        let avg = AveragedOperator::new(pool, plan).unwrap();
        let eval = avg.evaluate_strings(&x).unwrap();
        // sigma_max hard-errors below 1 - slack; a clean return plus the
        // explicit comparison certifies the bound.
        let sigma = avg
            .sigma_max(&x, &eval, tol::DEFAULT_FIXED_POINT_GUARD)
            .unwrap();
        prop_assert!(sigma >= 1.0 - tol::SIGMA_UNITY_SLACK, "sigma = {sigma}");
    }
}
